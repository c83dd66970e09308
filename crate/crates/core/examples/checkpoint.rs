//! Saves a trained model to the text checkpoint format and reloads it.

use cbt::cbt::{build_dataset, BuilderConfig};
use cbt::corpus::{Lexicon, SegmentConfig, Split, WordClass};
use cbt::eval::predictions;
use cbt::memnn::{read_checkpoint, write_checkpoint};
use cbt::selfsup::{selfsup_train, SelfSupConfig, SelfSupModel};
use cbt::storybook::{generate, to_books, StorybookConfig};

fn main() -> anyhow::Result<()> {
    let books = to_books(
        &generate(&StorybookConfig {
            books: 3,
            stories_per_book: 4,
            ..Default::default()
        })?,
        &Lexicon::default(),
        &SegmentConfig::default(),
    );
    let ds = build_dataset(&books, &[WordClass::NamedEntity], &BuilderConfig::default())?;
    let train = ds.get(Split::Train, WordClass::NamedEntity);
    let valid = ds.get(Split::Valid, WordClass::NamedEntity);
    let (model, _) = selfsup_train(train, valid, &SelfSupConfig::default())?;

    let dir = std::env::temp_dir().join("cbt_checkpoint_example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("selfsup.ckpt");
    write_checkpoint(&model.to_checkpoint(), &path)?;
    let back = SelfSupModel::from_checkpoint(&read_checkpoint(&path)?)?;
    let same = predictions(&model, valid, 0) == predictions(&back, valid, 0);
    println!("{} ({} bytes), identical predictions: {same}", path.display(), std::fs::metadata(&path)?.len());
    Ok(())
}
