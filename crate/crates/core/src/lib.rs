//! Compact convolutional network for EEG classification.
//!
//! The crate covers the whole experimental stack: a small reverse-mode
//! tensor engine ([`ops`], [`graph`]), the network and its ablations
//! ([`model`]), Adam training ([`optim`]), preprocessing and subject-level
//! fold construction ([`pipeline`]), synthetic data ([`synth`]) and the
//! evaluation statistics ([`stats`]).

// Validation rejects NaN via `!(x > 0.0)`-style checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod codec;
pub mod error;
pub mod graph;
pub mod model;
pub mod ops;
pub mod optim;
pub mod pipeline;
pub mod rng;
pub mod stats;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};
pub use model::{count_parameters, enumerate_configs, Ablation, EegNet, KernelConfig, ModelSpec};
pub use optim::{train, TrainConfig, TrainReport};
pub use pipeline::{EpochSet, FoldPlan};
pub use stats::{Metric, MetricSummary, RankTable};
pub use synth::SyntheticSpec;
pub use tensor::Tensor;
