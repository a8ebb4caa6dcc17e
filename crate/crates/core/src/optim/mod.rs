//! Optimizer, regularization penalty and the training loop.

mod adam;
mod penalty;
mod train;

pub use adam::{AdamConfig, AdamState};
pub use penalty::{elastic_net_penalty, elastic_net_subgradient};
pub use train::{
    evaluate, format_float, mean_cross_entropy, predict_set, spatial_penalty, train, EpochRecord, TrainConfig,
    TrainReport, EVAL_BATCH,
};
