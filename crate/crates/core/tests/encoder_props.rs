//! Property tests for memory and input encoders.

use cbt::baselines::EmbeddingModel;
use cbt::cbt::{Question, BLANK};
use cbt::corpus::WordClass;
use cbt::features::{
    encode_input, encode_lexical, encode_sentential, encode_windows, FeatureKind, InputEncoding, Vocab, WindowSet,
};
use cbt::predict::Predictor;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: &[&str] = &["Ann", "bob", "cat", "dog", "egg", "fox", "gate", "hat", "ink", "jam", "kite", "lamp"];

fn question(seed: u64) -> Question {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let word = |rng: &mut ChaCha8Rng| WORDS[rng.gen_range(0..WORDS.len())].to_string();
    let context: Vec<Vec<String>> = (0..rng.gen_range(1..8))
        .map(|_| (0..rng.gen_range(1..10)).map(|_| word(&mut rng)).collect())
        .collect();
    let mut query: Vec<String> = (0..rng.gen_range(1..10)).map(|_| word(&mut rng)).collect();
    let blank = rng.gen_range(0..query.len());
    query[blank] = BLANK.to_string();
    let mut candidates: Vec<String> = WORDS.choose_multiple(&mut rng, 10).map(|w| w.to_lowercase()).collect();
    candidates.sort();
    Question {
        context,
        query,
        answer: candidates[0].clone(),
        candidates,
        word_class: WordClass::CommonNoun,
        book_id: "toy".into(),
        passage_index: 0,
    }
}

proptest! {
    #[test]
    fn one_window_per_candidate_mention(seed in any::<u64>(), half in 0usize..4) {
        let q = question(seed);
        let b = 2 * half + 1;
        let vocab = Vocab::build([&q], 1);
        let mentions = q
            .context_tokens()
            .filter(|t| q.candidates.contains(&t.to_lowercase()))
            .count();
        for kind in [FeatureKind::BagOfWords, FeatureKind::PerPosition(b)] {
            let (mem, _) = encode_windows(&q, b, &vocab, kind, WindowSet::Candidates);
            prop_assert_eq!(mem.len(), mentions);
            for (slot, meta) in mem.slots.iter().zip(&mem.meta) {
                prop_assert_eq!(slot.len(), b);
                prop_assert!(meta.candidate.is_some());
            }
            let (all, _) = encode_windows(&q, b, &vocab, kind, WindowSet::All);
            prop_assert_eq!(all.len(), q.context_tokens().count());
        }
    }

    #[test]
    fn lexical_memory_holds_at_most_n_max_words(seed in any::<u64>(), n_max in 1usize..80) {
        let q = question(seed);
        let vocab = Vocab::build([&q], 1);
        let before = q.context_tokens().count() + q.blank_position().unwrap();
        let (mem, _) = encode_lexical(&q, n_max, &vocab);
        prop_assert_eq!(mem.len(), before.min(n_max));
        let query_part = &q.query[..q.blank_position().unwrap()];
        if let Some(last) = query_part.last().or_else(|| q.context_tokens().last()) {
            prop_assert_eq!(&mem.meta.last().unwrap().word, &last.to_lowercase());
        }
    }

    #[test]
    fn one_sentential_slot_per_context_sentence(seed in any::<u64>()) {
        let q = question(seed);
        let (mem, _) = encode_sentential(&q, &Vocab::build([&q], 1));
        prop_assert_eq!(mem.len(), q.context.len());
    }

    #[test]
    fn query_only_model_ignores_the_context(seed in any::<u64>()) {
        let q = question(seed);
        let vocab = Vocab::build([&q], 1);
        let model = EmbeddingModel::new(InputEncoding::Query, 8, vocab, 0.5, &mut ChaCha8Rng::seed_from_u64(seed));
        let mut shuffled = q.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        for s in shuffled.context.iter_mut() {
            s.shuffle(&mut rng);
        }
        shuffled.context.shuffle(&mut rng);
        shuffled.context.push(vec!["zebra".into(), "hat".into()]);
        prop_assert_eq!(
            encode_input(&q, InputEncoding::Query, &model.vocab),
            encode_input(&shuffled, InputEncoding::Query, &model.vocab)
        );
        let a = model.predict(&q, &mut ChaCha8Rng::seed_from_u64(0));
        let b = model.predict(&shuffled, &mut ChaCha8Rng::seed_from_u64(0));
        prop_assert_eq!(a.scores, b.scores);
        prop_assert_eq!(a.predicted, b.predicted);
    }
}
