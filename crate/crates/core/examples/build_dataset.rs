//! Builds cloze questions from generated storybooks and writes them in the
//! released CBT text format.
//!
//! cargo run --example build_dataset -- [out_dir]

use cbt::cbt::{build_dataset, write_cbt, BuilderConfig};
use cbt::corpus::{Lexicon, SegmentConfig, Split, WordClass};
use cbt::eval::dataset_hash;
use cbt::storybook::{generate, to_books, StorybookConfig};

fn main() -> anyhow::Result<()> {
    let out = std::path::PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "cbt_out".into()));
    let cfg = StorybookConfig {
        books: 4,
        stories_per_book: 4,
        ..Default::default()
    };
    let books = to_books(&generate(&cfg)?, &Lexicon::default(), &SegmentConfig::default());
    let ds = build_dataset(&books, &WordClass::QUESTION_CLASSES, &BuilderConfig::default())?;
    std::fs::create_dir_all(&out)?;
    for split in Split::ALL {
        for class in WordClass::QUESTION_CLASSES {
            let qs = ds.get(split, class);
            let path = out.join(format!("cbtest_{}_{}.txt", class.code(), split.name()));
            write_cbt(qs, &path)?;
            println!("{:<28} {:>5} questions  {}", path.display(), qs.len(), dataset_hash(qs));
        }
    }
    for ((split, class, reason), n) in &ds.rejected {
        println!("rejected {split} {class} {reason:?}: {n}");
    }
    Ok(())
}
