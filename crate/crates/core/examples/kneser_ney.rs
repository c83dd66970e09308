//! Trains a Kneser-Ney language model on reconstructed training text and
//! answers questions by scoring each filled-in query, with and without the
//! unigram cache.

use cbt::baselines::{corpus_sentences, Discounting, KneserNey, KneserNeyPredictor};
use cbt::cbt::{build_dataset, BuilderConfig};
use cbt::corpus::{Lexicon, SegmentConfig, Split, WordClass};
use cbt::eval::evaluate;
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
    let ds = build_dataset(&books, &WordClass::QUESTION_CLASSES, &BuilderConfig::default())?;
    let train = ds.split(Split::Train);
    let valid = ds.split(Split::Valid);
    let kn = KneserNey::train(&corpus_sentences(&train, 1), 5, Discounting::Modified)?;
    println!("vocabulary {} words, discounts {:?}", kn.vocab_size(), kn.discounts());
    let s: Vec<String> = "the fox ran into the wood .".split(' ').map(String::from).collect();
    println!("log10 p({}) = {:.3}", s.join(" "), kn.score(&s));
    for cache_mu in [None, Some(0.1)] {
        let row = evaluate(&KneserNeyPredictor { model: &kn, cache_mu }, &valid, 0, "-");
        let acc = WordClass::QUESTION_CLASSES.map(|c| row.accuracy(c).unwrap_or(f64::NAN));
        println!("cache {cache_mu:?}: NE {:.3} CN {:.3} V {:.3} P {:.3}", acc[0], acc[1], acc[2], acc[3]);
    }
    Ok(())
}
