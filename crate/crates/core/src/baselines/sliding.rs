use std::collections::{HashMap, HashSet};

use rand::RngCore;

use super::{context_lower, query_lower};
use crate::cbt::{Question, BLANK};
use crate::predict::{PredictionScores, Predictor};

/// `log(1 + |context| / count_context(w))`; zero for words absent from the
/// context.
pub fn idf(counts: &HashMap<&str, usize>, context_len: usize, w: &str) -> f64 {
    match counts.get(w) {
        Some(&c) if c > 0 => (1.0 + context_len as f64 / c as f64).ln(),
        _ => 0.0,
    }
}

/// For each candidate, the best score of a query-length window slid over
/// the context, where a window scores the idf of each of its words that
/// belongs to the query with the candidate filled in.
pub fn sliding_window_scores(q: &Question) -> Vec<f64> {
    let ctx = context_lower(q);
    let query = query_lower(q);
    let blank = BLANK.to_lowercase();
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for w in &ctx {
        *counts.entry(w.as_str()).or_default() += 1;
    }
    let weights: Vec<f64> = ctx.iter().map(|w| idf(&counts, ctx.len(), w)).collect();
    let len = query.len().min(ctx.len()).max(1);
    let base: HashSet<&str> = query.iter().filter(|w| **w != blank).map(|w| w.as_str()).collect();
    q.candidates
        .iter()
        .map(|c| {
            let c = c.to_lowercase();
            let hit: Vec<f64> = ctx
                .iter()
                .zip(&weights)
                .map(|(w, &iw)| if *w == c || base.contains(w.as_str()) { iw } else { 0.0 })
                .collect();
            if hit.is_empty() {
                return 0.0;
            }
            (0..=hit.len() - len)
                .map(|start| hit[start..start + len].iter().sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Sliding-window lexical overlap baseline; ties are broken at random.
pub struct SlidingWindow;

impl Predictor for SlidingWindow {
    fn name(&self) -> String {
        "sliding-window".into()
    }

    fn predict(&self, q: &Question, rng: &mut dyn RngCore) -> PredictionScores {
        PredictionScores::from_scores(sliding_window_scores(q), rng)
    }
}
