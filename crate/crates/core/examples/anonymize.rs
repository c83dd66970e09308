//! Replaces entity names with per-question shuffled placeholders and shows
//! how much a trained model relied on the names themselves.

use cbt::cbt::{build_dataset, BuilderConfig};
use cbt::corpus::{Lexicon, SegmentConfig, Split, WordClass};
use cbt::eval::{anonymize, anonymize_question, evaluate};
use cbt::selfsup::{selfsup_train, SelfSupConfig};
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

    let q = anonymize_question(&valid[0], 7);
    println!("query: {}\ncandidates: {}\nanswer: {}\n", q.query.join(" "), q.candidates.join("|"), q.answer);

    let cfg = SelfSupConfig::default();
    let (plain, _) = selfsup_train(train, valid, &cfg)?;
    let (anon, _) = selfsup_train(&anonymize(train, 1), &[], &cfg)?;
    let ne = |r: cbt::eval::EvalRow| r.accuracy(WordClass::NamedEntity).unwrap_or(0.0);
    println!("names kept:       {:.3}", ne(evaluate(&plain, valid, 0, "-")));
    println!("names anonymized: {:.3}", ne(evaluate(&anon, &anonymize(valid, 2), 0, "-")));
    Ok(())
}
