use std::collections::HashMap;

use rand::RngCore;

use super::context_lower;
use crate::cbt::Question;
use crate::predict::{PredictionScores, Predictor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyScope {
    /// Counts over the training corpus.
    Corpus,
    /// Counts over the question's own context.
    Context,
}

/// Lowercased token counts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrequencyTable {
    pub counts: HashMap<String, usize>,
}

impl FrequencyTable {
    pub fn from_sentences<'a>(sentences: impl IntoIterator<Item = &'a Vec<String>>) -> Self {
        let mut counts = HashMap::new();
        for s in sentences {
            for w in s {
                *counts.entry(w.to_lowercase()).or_default() += 1;
            }
        }
        FrequencyTable { counts }
    }

    pub fn count(&self, w: &str) -> usize {
        self.counts.get(&w.to_lowercase()).copied().unwrap_or(0)
    }
}

/// Picks the most frequent candidate; ties are broken at random.
pub struct MaxFrequency {
    pub scope: FrequencyScope,
    pub table: FrequencyTable,
}

impl MaxFrequency {
    pub fn context() -> Self {
        MaxFrequency {
            scope: FrequencyScope::Context,
            table: FrequencyTable::default(),
        }
    }

    pub fn corpus(table: FrequencyTable) -> Self {
        MaxFrequency {
            scope: FrequencyScope::Corpus,
            table,
        }
    }

    pub fn counts(&self, q: &Question) -> Vec<usize> {
        match self.scope {
            FrequencyScope::Corpus => q.candidates.iter().map(|c| self.table.count(c)).collect(),
            FrequencyScope::Context => {
                let ctx = context_lower(q);
                q.candidates
                    .iter()
                    .map(|c| {
                        let c = c.to_lowercase();
                        ctx.iter().filter(|w| **w == c).count()
                    })
                    .collect()
            }
        }
    }
}

impl Predictor for MaxFrequency {
    fn name(&self) -> String {
        match self.scope {
            FrequencyScope::Corpus => "max-frequency(corpus)".into(),
            FrequencyScope::Context => "max-frequency(context)".into(),
        }
    }

    fn predict(&self, q: &Question, rng: &mut dyn RngCore) -> PredictionScores {
        let scores = self.counts(q).into_iter().map(|c| (c as f64).ln()).collect();
        PredictionScores::from_scores(scores, rng)
    }
}
