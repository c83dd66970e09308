//! Comparison systems: candidate frequency, sliding-window lexical overlap,
//! word-distance alignment, a Kneser-Ney n-gram model (with an optional
//! context cache), and supervised embedding models.

mod distance;
mod embedding;
mod frequency;
mod kn;
mod sliding;

pub use distance::{mention_penalty, word_distance_scores, WordDistance, WordDistanceConfig};
pub use embedding::{embed_train, parse_encoding, EmbeddingConfig, EmbeddingGrads, EmbeddingModel};
pub use frequency::{FrequencyScope, FrequencyTable, MaxFrequency};
pub use kn::{corpus_sentences, Discounting, KneserNey, KneserNeyPredictor, END, START, UNK_TOKEN};
pub use sliding::{idf, sliding_window_scores, SlidingWindow};

use crate::cbt::Question;

/// Lowercased flattened context.
pub(crate) fn context_lower(q: &Question) -> Vec<String> {
    q.context_tokens().map(|t| t.to_lowercase()).collect()
}

pub(crate) fn query_lower(q: &Question) -> Vec<String> {
    q.query.iter().map(|t| t.to_lowercase()).collect()
}
