//! Untrained baselines on generated questions: random, context frequency,
//! sliding window and word distance.

use cbt::baselines::{MaxFrequency, SlidingWindow, WordDistance, WordDistanceConfig};
use cbt::cbt::{build_dataset, BuilderConfig};
use cbt::corpus::{Lexicon, SegmentConfig, Split, WordClass};
use cbt::eval::{dataset_hash, evaluate, render_markdown, EvalReport};
use cbt::predict::{Predictor, RandomPredictor};
use cbt::storybook::{generate, to_books, StorybookConfig};

fn main() -> anyhow::Result<()> {
    let cfg = StorybookConfig {
        books: 3,
        stories_per_book: 8,
        ..Default::default()
    };
    let books = to_books(&generate(&cfg)?, &Lexicon::default(), &SegmentConfig::default());
    let ds = build_dataset(&books, &WordClass::QUESTION_CLASSES, &BuilderConfig::default())?;
    let valid = ds.split(Split::Valid);
    let models: Vec<Box<dyn Predictor>> = vec![
        Box::new(RandomPredictor),
        Box::new(MaxFrequency::context()),
        Box::new(SlidingWindow),
        Box::new(WordDistance {
            cfg: WordDistanceConfig { m: 5 },
        }),
    ];
    let rows = models.iter().map(|m| evaluate(&**m, &valid, 0, "-")).collect();
    let report = EvalReport {
        rows,
        seed: 0,
        dataset_hash: dataset_hash(&valid),
    };
    print!("{}", render_markdown(&[report]));
    Ok(())
}
