//! The cue-word task: the answer always follows the word `cue` in the
//! context. The self-supervised window model learns it in a few epochs.
//! Updates stop once hard selection is right, so the step size sets how far
//! the cued window's margin grows; soft scoring needs the larger margin.

use cbt::corpus::WordClass;
use cbt::eval::{ablate, evaluate, Ablation};
use cbt::selfsup::{selfsup_train, SelfSupConfig};
use cbt::storybook::cue_word_questions;

fn main() -> anyhow::Result<()> {
    let train = cue_word_questions(2000, 1);
    let held_out = cue_word_questions(500, 2);
    let mut cfg = SelfSupConfig {
        p: 50,
        ..Default::default()
    };
    cfg.sgd.epochs = 5;
    cfg.sgd.lr = 0.1;
    let (model, _) = selfsup_train(&train, &[], &cfg)?;
    for (name, qs) in [("train", &train), ("held-out", &held_out)] {
        let soft = evaluate(&model, qs, 0, "-").accuracy(WordClass::NamedEntity);
        let hard = evaluate(&ablate(&model, Ablation::HardScoring)?, qs, 0, "-").accuracy(WordClass::NamedEntity);
        println!("{name}: soft {:.3} hard {:.3}", soft.unwrap_or(0.0), hard.unwrap_or(0.0));
    }
    Ok(())
}
