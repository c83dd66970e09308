//! Single-hop window memory network trained with self-supervised hard
//! attention. The supporting memory is inferred from the answer: the
//! best-scoring window centred on it. At test time candidate scores sum the
//! softmaxed scores of their windows.

mod model;
mod train;

pub use model::{
    aggregate_candidates, hard_select, supporting_memory, ScoringOptions, SelfSupGrads, SelfSupModel, SelfSupPredictor,
};
pub use train::{lm_expand, selfsup_train, selfsup_train_from, SelfSupConfig, SelfSupLoss, SelfSupMode};
