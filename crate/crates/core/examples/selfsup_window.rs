//! Window memory with self-supervised hard attention: trains on the window
//! centred at the answer, then compares soft and hard test-time scoring.

use cbt::cbt::{build_dataset, BuilderConfig};
use cbt::corpus::{Lexicon, SegmentConfig, Split, WordClass};
use cbt::eval::{ablate, evaluate, Ablation};
use cbt::selfsup::{selfsup_train, SelfSupConfig, SelfSupLoss};
use cbt::storybook::{generate, to_books, StorybookConfig};

fn main() -> anyhow::Result<()> {
    let books = to_books(
        &generate(&StorybookConfig {
            books: 4,
            stories_per_book: 10,
            ..Default::default()
        })?,
        &Lexicon::default(),
        &SegmentConfig::default(),
    );
    let ds = build_dataset(&books, &[WordClass::NamedEntity], &BuilderConfig::default())?;
    let train = ds.get(Split::Train, WordClass::NamedEntity);
    let valid = ds.get(Split::Valid, WordClass::NamedEntity);
    for loss in [SelfSupLoss::SoftmaxNll, SelfSupLoss::Margin(0.1)] {
        let cfg = SelfSupConfig {
            loss,
            ..Default::default()
        };
        let (model, stats) = selfsup_train(train, valid, &cfg)?;
        let last = stats.last().expect("at least one epoch");
        let soft = evaluate(&model, valid, 0, "-");
        let hard = evaluate(&ablate(&model, Ablation::HardScoring)?, valid, 0, "-");
        println!(
            "{loss:?}: {} updates in the last epoch, soft {:.3}, hard {:.3}",
            last.updates,
            soft.accuracy(WordClass::NamedEntity).unwrap_or(0.0),
            hard.accuracy(WordClass::NamedEntity).unwrap_or(0.0)
        );
    }
    Ok(())
}
