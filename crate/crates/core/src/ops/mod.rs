//! Differentiable operations used by the network, each with a batched
//! forward kernel, its exact backward kernel, and a single-sample entry point.

mod activation;
mod conv;
mod dense;
mod norm;
mod pool;

pub use activation::{apply_mask, dropout, dropout_mask, elu, elu_backward, elu_scalar};
pub use conv::{
    conv2d_same_batch, conv2d_same_batch_backward, conv2d_same_forward, same_pad, spatial_conv_batch,
    spatial_conv_batch_backward, spatial_conv_forward, ConvGrads,
};
pub use dense::{
    affine_batch, affine_batch_backward, affine_param_count, affine_softmax, cross_entropy, log_softmax, softmax,
    softmax_rows, transpose_swap, PROB_FLOOR,
};
pub use norm::{
    batchnorm_batch, batchnorm_batch_backward, batchnorm_forward, batchnorm_param_count, BatchStats, BnCache,
    RunningStats, BN_EPSILON, BN_MOMENTUM,
};
pub use pool::{maxpool2d, maxpool2d_batch, maxpool2d_batch_backward};

/// Whether stochastic and batch-statistic layers run in training or inference behaviour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}
