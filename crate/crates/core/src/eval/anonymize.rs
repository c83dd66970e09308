use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cbt::Question;
use crate::features::placeholder;
use crate::util::derive_seed;

/// Replaces every mention of each candidate (context, query, candidate
/// list, answer; case-insensitive) by `@entityK`, with K assigned by a
/// shuffled order drawn from `seed`. Candidates stay sorted.
pub fn anonymize_question(q: &Question, seed: u64) -> Question {
    let mut ks: Vec<usize> = (1..=q.candidates.len()).collect();
    ks.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let map: HashMap<String, String> = q
        .candidates
        .iter()
        .zip(&ks)
        .map(|(c, &k)| (c.to_lowercase(), placeholder(k)))
        .collect();
    let sub = |w: &String| map.get(&w.to_lowercase()).cloned().unwrap_or_else(|| w.clone());
    let mut out = q.clone();
    out.context = q.context.iter().map(|s| s.iter().map(sub).collect()).collect();
    out.query = q.query.iter().map(sub).collect();
    out.candidates = q.candidates.iter().map(sub).collect();
    out.candidates.sort();
    out.answer = sub(&q.answer);
    out
}

/// Anonymizes each question with its own mapping.
pub fn anonymize(questions: &[Question], seed: u64) -> Vec<Question> {
    questions
        .iter()
        .enumerate()
        .map(|(i, q)| anonymize_question(q, derive_seed(seed, i as u64)))
        .collect()
}
