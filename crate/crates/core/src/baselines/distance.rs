use rand::RngCore;

use super::{context_lower, query_lower};
use crate::cbt::Question;
use crate::error::{Error, Result};
use crate::predict::{PredictionScores, Predictor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WordDistanceConfig {
    /// Maximum penalty contributed by one query word.
    pub m: usize,
}

impl Default for WordDistanceConfig {
    fn default() -> Self {
        WordDistanceConfig { m: 5 }
    }
}

impl WordDistanceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Config("word-distance penalty m must be >= 1".into()));
        }
        Ok(())
    }
}

/// Alignment penalty of the query superimposed on the context with its
/// blank at `mention`: each query word adds the distance from its aligned
/// position to the nearest equal word inside the covered span, capped at m.
pub fn mention_penalty(ctx: &[String], query: &[String], blank: usize, mention: usize, m: usize) -> usize {
    let offset = mention as isize - blank as isize;
    let lo = offset.max(0) as usize;
    let hi = ((offset + query.len() as isize).min(ctx.len() as isize)).max(0) as usize;
    query
        .iter()
        .enumerate()
        .filter(|(t, _)| *t != blank)
        .map(|(t, w)| {
            let aligned = offset + t as isize;
            (lo..hi)
                .filter(|&j| ctx[j] == *w)
                .map(|j| (j as isize - aligned).unsigned_abs())
                .min()
                .map_or(m, |d| d.min(m))
        })
        .sum()
}

/// Per-candidate minimum penalty over its mentions (`None` without
/// mentions) and the winning candidate: lowest penalty, earliest mention
/// on ties.
pub fn word_distance_scores(q: &Question, cfg: WordDistanceConfig) -> (Vec<Option<usize>>, Option<usize>) {
    let ctx = context_lower(q);
    let query = query_lower(q);
    let blank = q.blank_position().unwrap_or(0);
    let cands: Vec<String> = q.candidates.iter().map(|c| c.to_lowercase()).collect();
    let mut best: Vec<Option<usize>> = vec![None; cands.len()];
    let mut winner: Option<(usize, usize)> = None;
    for (i, w) in ctx.iter().enumerate() {
        let Some(c) = cands.iter().position(|x| x == w) else { continue };
        let pen = mention_penalty(&ctx, &query, blank, i, cfg.m);
        if best[c].map_or(true, |b| pen < b) {
            best[c] = Some(pen);
        }
        if winner.map_or(true, |(p, _)| pen < p) {
            winner = Some((pen, c));
        }
    }
    (best, winner.map(|(_, c)| c))
}

pub struct WordDistance {
    pub cfg: WordDistanceConfig,
}

impl Predictor for WordDistance {
    fn name(&self) -> String {
        format!("word-distance(m={})", self.cfg.m)
    }

    /// Scores are negated penalties; the earliest-mention rule, not the
    /// random tie-break, decides between equal penalties.
    fn predict(&self, q: &Question, rng: &mut dyn RngCore) -> PredictionScores {
        let (pens, winner) = word_distance_scores(q, self.cfg);
        let scores: Vec<f64> = pens
            .iter()
            .map(|p| p.map_or(f64::NEG_INFINITY, |p| -(p as f64)))
            .collect();
        let mut out = PredictionScores::from_scores(scores, rng);
        if let Some(w) = winner {
            out.tie = out.scores.iter().filter(|&&s| s == out.scores[w]).count() > 1;
            out.predicted = w;
        }
        out
    }
}
