//! Trains end-to-end memory networks over the three memory formats on
//! named-entity questions and reports per-epoch losses and accuracy.
//!
//! cargo run --release --example train_memnn

use cbt::cbt::{build_dataset, BuilderConfig};
use cbt::corpus::{Lexicon, SegmentConfig, Split, WordClass};
use cbt::eval::evaluate;
use cbt::memnn::{train, MemN2NShape, TrainConfig};
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
    let train_qs = ds.get(Split::Train, WordClass::NamedEntity);
    let valid_qs = ds.get(Split::Valid, WordClass::NamedEntity);
    for shape in [
        MemN2NShape::lexical_default(),
        MemN2NShape::window_default(),
        MemN2NShape::sentential_default(),
    ] {
        let mut cfg = TrainConfig::for_shape(shape);
        cfg.sgd.epochs = 4;
        let (model, stats) = train(train_qs, valid_qs, &cfg)?;
        for s in &stats {
            println!("  epoch {} lr {:.4} train {:.3} valid {:?}", s.epoch, s.lr, s.train_loss, s.valid_loss);
        }
        let row = evaluate(&model, valid_qs, 0, "-");
        println!("{:?}: NE {:.3}", shape.format, row.accuracy(WordClass::NamedEntity).unwrap_or(0.0));
    }
    Ok(())
}
