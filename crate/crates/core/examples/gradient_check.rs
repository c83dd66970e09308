//! Central finite-difference check of the memory network backward pass for
//! every memory format, with and without the half-ReLU.

use cbt::cbt::{build_dataset, BuilderConfig};
use cbt::corpus::{Lexicon, SegmentConfig, Split, WordClass};
use cbt::features::Vocab;
use cbt::memnn::{grad_check, MemN2N, MemN2NShape, MemoryFormat};
use cbt::storybook::{generate, to_books, StorybookConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> anyhow::Result<()> {
    let books = to_books(
        &generate(&StorybookConfig {
            books: 3,
            stories_per_book: 2,
            ..Default::default()
        })?,
        &Lexicon::default(),
        &SegmentConfig::default(),
    );
    let ds = build_dataset(&books, &[WordClass::NamedEntity], &BuilderConfig::default())?;
    let q = &ds.get(Split::Train, WordClass::NamedEntity)[0];
    for format in [MemoryFormat::Lexical { n_max: 200 }, MemoryFormat::Window { b: 5 }, MemoryFormat::Sentential] {
        for relu_half in [false, true] {
            let shape = MemN2NShape {
                format,
                p: 8,
                hops: 2,
                relu_half,
                use_time: true,
            };
            let m = MemN2N::new(shape, Vocab::build([q], 1), 0.5, &mut ChaCha8Rng::seed_from_u64(1));
            let ex = m.examples(q, false).remove(0);
            let r = grad_check(&m, &ex, 1e-4);
            println!(
                "{format:?} relu_half={relu_half}: max rel err {:.2e} ({} in {}), kink distance {:.1e}",
                r.max_rel_err,
                r.worst_pair.0,
                r.worst_block,
                m.kink_distance(&ex)
            );
        }
    }
    Ok(())
}
