//! Brute-force reference scorers and toy data shared by the integration
//! tests.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use cbt::baselines::{Discounting, KneserNey, END, UNK_TOKEN};
use cbt::cbt::{Question, BLANK};
use cbt::corpus::WordClass;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const WORDS: &[&str] = &[
    "ann", "bob", "cat", "dog", "egg", "fox", "gate", "hat", "ink", "jam", "kite", "lamp", "mud", "nut",
];

pub fn random_word(rng: &mut ChaCha8Rng) -> String {
    let w = WORDS[rng.gen_range(0..WORDS.len())];
    if rng.gen_bool(0.2) {
        let mut c = w.chars();
        c.next().unwrap().to_uppercase().chain(c).collect()
    } else {
        w.to_string()
    }
}

pub fn random_question(rng: &mut ChaCha8Rng) -> Question {
    let context: Vec<Vec<String>> = (0..rng.gen_range(1..5))
        .map(|_| (0..rng.gen_range(1..9)).map(|_| random_word(rng)).collect())
        .collect();
    let mut query: Vec<String> = (0..rng.gen_range(1..9)).map(|_| random_word(rng)).collect();
    let blank = rng.gen_range(0..query.len());
    query[blank] = BLANK.to_string();
    let mut candidates: Vec<String> = WORDS.choose_multiple(rng, 10).map(|w| w.to_string()).collect();
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

pub fn flat_lower(q: &Question) -> Vec<String> {
    q.context.iter().flatten().map(|w| w.to_lowercase()).collect()
}

/// Every query-length window of the context, scored by summed idf of the
/// words it shares with the filled-in query.
pub fn sliding_oracle(q: &Question) -> Vec<f64> {
    let ctx = flat_lower(q);
    let n = ctx.len();
    let len = q.query.len().min(n);
    let mut count: HashMap<&str, f64> = HashMap::new();
    for w in &ctx {
        *count.entry(w).or_default() += 1.0;
    }
    q.candidates
        .iter()
        .map(|c| {
            let filled: HashSet<String> = q
                .query
                .iter()
                .map(|w| if w == BLANK { c.to_lowercase() } else { w.to_lowercase() })
                .collect();
            let mut best = f64::NEG_INFINITY;
            for start in 0..=n - len {
                let mut s = 0.0;
                for w in &ctx[start..start + len] {
                    if filled.contains(w) {
                        s += (1.0 + n as f64 / count[w.as_str()]).ln();
                    }
                }
                best = best.max(s);
            }
            best
        })
        .collect()
}

/// Penalty of one mention: for each non-blank query word, grow a radius
/// around its aligned position until an equal word inside the covered span
/// turns up, giving up at `m`.
pub fn mention_oracle(ctx: &[String], query: &[String], blank: usize, mention: usize, m: usize) -> usize {
    let start = mention as i64 - blank as i64;
    let lo = start.max(0);
    let hi = (start + query.len() as i64).min(ctx.len() as i64);
    let mut total = 0;
    for (t, w) in query.iter().enumerate() {
        if t == blank {
            continue;
        }
        let aligned = start + t as i64;
        let w = w.to_lowercase();
        let found = (0..m as i64).find(|&d| {
            [aligned - d, aligned + d]
                .iter()
                .any(|&j| j >= lo && j < hi && ctx[j as usize] == w)
        });
        total += found.map_or(m, |d| d as usize);
    }
    total
}

pub fn distance_oracle(q: &Question, m: usize) -> (Vec<Option<usize>>, Option<usize>) {
    let ctx = flat_lower(q);
    let blank = q.query.iter().position(|w| w == BLANK).unwrap();
    let mut per: Vec<Option<usize>> = vec![None; q.candidates.len()];
    let mut all: Vec<(usize, usize, usize)> = Vec::new();
    for (c, cand) in q.candidates.iter().enumerate() {
        for (i, w) in ctx.iter().enumerate() {
            if *w == cand.to_lowercase() {
                let p = mention_oracle(&ctx, &q.query, blank, i, m);
                per[c] = Some(per[c].map_or(p, |b: usize| b.min(p)));
                all.push((p, i, c));
            }
        }
    }
    all.sort();
    (per, all.first().map(|&(_, _, c)| c))
}

/// (label, model value, hand value) on the "a a b a" bigram fixture with a
/// fixed discount of 0.75. Continuation counts: a 3, b 1, </s> 1; four
/// predictable words.
pub fn kn_fixture() -> Vec<(&'static str, f64, f64)> {
    let m = KneserNey::train(&[vec!["a".into(), "a".into(), "b".into(), "a".into()]], 2, Discounting::Fixed(0.75))
        .unwrap();
    // An unseen bigram history leaves the unigram level in charge.
    let unigram = |w: &str| m.prob(&["</s>"], w);
    vec![
        ("p(a)", unigram("a"), 0.5625),
        ("p(b)", unigram("b"), 0.1625),
        ("p(</s>)", unigram(END), 0.1625),
        ("p(<unk>)", unigram(UNK_TOKEN), 0.1125),
        ("p(a|b)", m.prob(&["b"], "a"), 0.25 + 0.75 * 0.5625),
        ("p(a|a)", m.prob(&["a"], "a"), 0.25 / 3.0 + 0.75 * 0.5625),
        ("p(a|<s>)", m.prob(&[], "a"), 0.25 + 0.75 * 0.5625),
    ]
}

/// Every history of exactly `len` words over `words`.
pub fn histories(words: &[String], len: usize) -> Vec<Vec<String>> {
    (0..len).fold(vec![Vec::new()], |acc, _| {
        acc.iter()
            .flat_map(|h| {
                words.iter().map(move |w| {
                    let mut h = h.clone();
                    h.push(w.clone());
                    h
                })
            })
            .collect()
    })
}

/// Largest |Σ_w p(w | h) - 1| over every history up to the model order,
/// drawn from the model vocabulary plus one unseen word.
pub fn kn_normalization_gap(m: &KneserNey) -> f64 {
    let vocab: Vec<String> = m.words().map(String::from).chain(["unseen".to_string()]).collect();
    let mut worst: f64 = 0.0;
    for len in 0..m.order() {
        for h in histories(&vocab, len) {
            let h: Vec<&str> = h.iter().map(String::as_str).collect();
            let total: f64 = m.words().map(|w| m.prob(&h, w)).sum();
            worst = worst.max((total - 1.0).abs());
        }
    }
    worst
}
