//! Property tests for question construction and the dataset text format.

use std::collections::HashSet;

use cbt::cbt::{build_dataset, parse_cbt_str, write_cbt_string, BuilderConfig, Question, BLANK};
use cbt::corpus::{Book, Split, TaggedToken, Token, WordClass};
use proptest::prelude::*;

const CLASSES: [WordClass; 5] = [
    WordClass::NamedEntity,
    WordClass::CommonNoun,
    WordClass::Verb,
    WordClass::Preposition,
    WordClass::Other,
];

/// Word `k` of a 40-word toy vocabulary, with a fixed class.
fn toy_word(k: usize) -> (String, WordClass) {
    let class = CLASSES[k % CLASSES.len()];
    let w = match class {
        WordClass::NamedEntity => format!("Name{k}"),
        _ => format!("w{k}"),
    };
    (w, class)
}

fn sentence() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0usize..40, 1..9)
}

fn book(id: usize, split: Split) -> impl Strategy<Value = Book> {
    prop::collection::vec(sentence(), 0..35).prop_map(move |ss| Book {
        id: format!("b{id}"),
        split,
        sentences: ss
            .into_iter()
            .map(|s| {
                s.into_iter()
                    .enumerate()
                    .map(|(i, k)| {
                        let (w, class) = toy_word(k);
                        TaggedToken {
                            token: Token::new(w, i),
                            class,
                        }
                    })
                    .collect()
            })
            .collect(),
    })
}

fn books() -> impl Strategy<Value = Vec<Book>> {
    (book(0, Split::Train), book(1, Split::Train), book(2, Split::Valid)).prop_map(|(a, b, c)| vec![a, b, c])
}

fn check_question(q: &Question, class: WordClass) -> Result<(), TestCaseError> {
    prop_assert_eq!(q.validate(), Ok(()));
    prop_assert_eq!(q.word_class, class);
    let ctx: HashSet<&str> = q.context_tokens().map(String::as_str).collect();
    prop_assert!(ctx.contains(q.answer.as_str()), "answer outside context");
    let mut sorted = q.candidates.clone();
    sorted.sort();
    prop_assert_eq!(&sorted, &q.candidates);
    prop_assert_eq!(q.query.iter().filter(|w| *w == BLANK).count(), 1);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_question_is_valid_and_counts_add_up(books in books(), seed in 0u64..1000) {
        let classes = WordClass::QUESTION_CLASSES;
        let cfg = BuilderConfig { rng_seed: seed, ..Default::default() };
        let ds = build_dataset(&books, &classes, &cfg).unwrap();
        for split in [Split::Train, Split::Valid] {
            let passages: usize = books
                .iter()
                .filter(|b| b.split == split)
                .map(|b| b.sentences.len().saturating_sub(20))
                .sum();
            for class in classes {
                let qs = ds.get(split, class);
                for q in qs {
                    check_question(q, class)?;
                }
                let rejected: usize = ds
                    .rejected
                    .iter()
                    .filter(|((s, c, _), _)| *s == split && *c == class)
                    .map(|(_, n)| n)
                    .sum();
                prop_assert_eq!(qs.len() + rejected, passages);
            }
        }
        prop_assert!(ds.get(Split::Test, WordClass::NamedEntity).is_empty());
    }

    #[test]
    fn building_is_deterministic(books in books(), seed in 0u64..1000) {
        let cfg = BuilderConfig { rng_seed: seed, ..Default::default() };
        let a = build_dataset(&books, &WordClass::QUESTION_CLASSES, &cfg).unwrap();
        let b = build_dataset(&books, &WordClass::QUESTION_CLASSES, &cfg).unwrap();
        prop_assert_eq!(a.questions, b.questions);
        prop_assert_eq!(a.rejected, b.rejected);
    }

    #[test]
    fn stride_thins_passages(books in books(), stride in 1usize..5) {
        let cfg = BuilderConfig { stride, ..Default::default() };
        let ds = build_dataset(&books, &[WordClass::CommonNoun], &cfg).unwrap();
        let passages: usize = books
            .iter()
            .map(|b| match b.sentences.len() {
                n if n < 21 => 0,
                n => (n - 21) / stride + 1,
            })
            .sum();
        let rejected: usize = ds.rejected.values().sum();
        prop_assert_eq!(ds.total() + rejected, passages);
    }

    #[test]
    fn format_round_trip_is_identity(books in books(), seed in 0u64..1000) {
        let cfg = BuilderConfig { rng_seed: seed, ..Default::default() };
        let ds = build_dataset(&books, &WordClass::QUESTION_CLASSES, &cfg).unwrap();
        for class in WordClass::QUESTION_CLASSES {
            let qs = ds.get(Split::Train, class);
            let text = write_cbt_string(qs);
            let back = parse_cbt_str(&text, "mem", class).unwrap();
            prop_assert_eq!(back.len(), qs.len());
            for (a, b) in back.iter().zip(qs) {
                prop_assert!(a.same_content(b));
            }
            prop_assert_eq!(write_cbt_string(&back), text);
        }
    }
}
