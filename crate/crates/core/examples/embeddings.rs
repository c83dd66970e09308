//! Embedding baselines with the four input encodings.

use cbt::baselines::{embed_train, EmbeddingConfig};
use cbt::cbt::{build_dataset, BuilderConfig};
use cbt::corpus::{Lexicon, SegmentConfig, Split, WordClass};
use cbt::eval::evaluate;
use cbt::features::InputEncoding;
use cbt::storybook::{generate, to_books, StorybookConfig};

fn main() -> anyhow::Result<()> {
    let books = to_books(
        &generate(&StorybookConfig {
            books: 4,
            stories_per_book: 6,
            ..Default::default()
        })?,
        &Lexicon::default(),
        &SegmentConfig::default(),
    );
    let ds = build_dataset(&books, &WordClass::QUESTION_CLASSES, &BuilderConfig::default())?;
    let train = ds.split(Split::Train);
    let valid = ds.split(Split::Valid);
    for enc in [
        InputEncoding::ContextPlusQuery,
        InputEncoding::Query,
        InputEncoding::Window(5),
        InputEncoding::WindowPosition(5),
    ] {
        let mut cfg = EmbeddingConfig::for_encoding(enc);
        cfg.sgd.epochs = 3;
        let (model, _) = embed_train(&train, &valid, &cfg)?;
        let row = evaluate(&model, &valid, 0, "-");
        let acc = WordClass::QUESTION_CLASSES.map(|c| row.accuracy(c).unwrap_or(f64::NAN));
        println!("{:<28} {:.3} {:.3} {:.3} {:.3}", model.name(), acc[0], acc[1], acc[2], acc[3]);
    }
    Ok(())
}
