//! Network variants: kernel configurations, ablations, parameter accounting,
//! the executable layer stack and its on-disk format.

mod io;
mod network;
mod spec;

pub use io::{decode_model, encode_model, load_model, save_model};
pub use network::{count_parameters, DropoutSource, EegNet, Forward, Layout, ParamCount, ParamDecl, TraceEntry};
pub use spec::{enumerate_configs, Ablation, KernelConfig, ModelSpec, LAYER2_KERNELS, LAYER3_KERNELS};
