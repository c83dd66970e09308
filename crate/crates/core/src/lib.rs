//! Children's-Book-Test-style cloze reading comprehension: dataset
//! construction from plain-text books, window and multi-hop memory networks,
//! self-supervised hard attention, non-neural and embedding baselines, and an
//! evaluation harness.

pub mod baselines;
pub mod cli;
pub mod cbt;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod memnn;
pub mod predict;
pub mod selfsup;
pub mod sgd;
pub mod storybook;
pub mod tensor;
pub mod util;

pub use error::{Error, Result};
