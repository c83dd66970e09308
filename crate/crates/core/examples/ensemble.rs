//! Averages the candidate distributions of self-supervised models trained
//! with different seeds.

use cbt::cbt::{build_dataset, BuilderConfig};
use cbt::corpus::{Lexicon, SegmentConfig, Split, WordClass};
use cbt::eval::{evaluate, Ensemble};
use cbt::predict::Predictor;
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
    let mut models = Vec::new();
    for seed in 1..=3 {
        let mut cfg = SelfSupConfig::default();
        cfg.sgd.seed = seed;
        let (m, _) = selfsup_train(train, valid, &cfg)?;
        let acc = evaluate(&m, valid, 0, "-").accuracy(WordClass::NamedEntity);
        println!("seed {seed}: {:.3}", acc.unwrap_or(0.0));
        models.push(m);
    }
    let ensemble = Ensemble {
        members: models.iter().map(|m| m as &dyn Predictor).collect(),
    };
    let acc = evaluate(&ensemble, valid, 0, "-").accuracy(WordClass::NamedEntity);
    println!("{}: {:.3}", ensemble.name(), acc.unwrap_or(0.0));
    Ok(())
}
