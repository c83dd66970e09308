//! End-to-end memory network: soft attention over encoded memories, hops
//! joined by a linear map, a full-vocabulary answer distribution, and SGD
//! training with hand-derived gradients.

mod checkpoint;
mod gradcheck;
mod model;
mod train;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CheckpointKind, CHECKPOINT_VERSION};
pub use gradcheck::{check_blocks, grad_check, numeric_gradient, rel_err, GradCheckReport, ParamBlocks};
pub use model::{
    attend, AttentionResult, Example, Forward, Grads, MemN2N, MemN2NShape, MemoryFormat,
};
pub use train::{train, train_from, EpochStats, TrainConfig};
