//! Fixtures shared by the benchmarks.

use eegnet_core::rng::stream;
use eegnet_core::synth::{generate, SyntheticSpec};
use eegnet_core::{EpochSet, Tensor};
use rand::Rng;

/// Uniform values in [-1, 1) from a fixed stream.
pub fn random_tensor(shape: &[usize], seed: u64) -> Tensor {
    let mut rng = stream(seed, "bench", &[]);
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Tensor::new(shape.to_vec(), data).expect("shape matches data")
}

/// Default synthetic ERP trials.
pub fn erp_set(trials: usize) -> EpochSet {
    let spec = SyntheticSpec::default();
    generate(&spec, trials, &mut stream(0, "bench-data", &[])).expect("default spec is valid")
}
