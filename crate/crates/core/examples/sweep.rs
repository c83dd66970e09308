//! Accuracy of the self-supervised window model against window size.

use cbt::cbt::{build_dataset, BuilderConfig};
use cbt::corpus::{Lexicon, SegmentConfig, Split, WordClass};
use cbt::eval::{evaluate, sweep};
use cbt::selfsup::{selfsup_train, SelfSupConfig};
use cbt::storybook::{generate, to_books, StorybookConfig};

fn main() -> anyhow::Result<()> {
    let books = to_books(
        &generate(&StorybookConfig {
            books: 4,
            stories_per_book: 8,
            ..Default::default()
        })?,
        &Lexicon::default(),
        &SegmentConfig::default(),
    );
    let ds = build_dataset(&books, &[WordClass::NamedEntity], &BuilderConfig::default())?;
    let train = ds.get(Split::Train, WordClass::NamedEntity);
    let valid = ds.get(Split::Valid, WordClass::NamedEntity);
    let grid: Vec<String> = ["1", "3", "5", "9", "15", "21"].map(String::from).to_vec();
    let result = sweep("b", &grid, 0, |v| {
        let cfg = SelfSupConfig {
            b: v.parse().map_err(|_| cbt::Error::Config(format!("bad window size {v}")))?,
            ..Default::default()
        };
        let (m, _) = selfsup_train(train, valid, &cfg)?;
        Ok(vec![evaluate(&m, valid, 0, v)])
    })?;
    print!("{}", result.to_csv());
    if let Some((b, acc)) = result.peak(WordClass::NamedEntity) {
        println!("peak at b={b}: {acc:.3}");
    }
    Ok(())
}
