use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{subsample_training, EpochSet};
use crate::rng;

use super::summary::{summarize, MetricSummary};

/// Repetitions per training-set size unless configured otherwise.
pub const DEFAULT_REPS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub k: usize,
    pub summary: MetricSummary,
}

/// `step, 2*step, ...` up to and including the largest multiple not above `total`.
pub fn default_sizes(total: usize, step: usize) -> Vec<usize> {
    (1..=total / step.max(1)).map(|i| i * step).collect()
}

/// For each `K`, draws `reps` subsamples of `full_train` (stream `"subsample"`
/// indexed by `[K, rep]` under `seed`), hands each to `runner` along with its
/// coordinates, and summarizes the returned test metrics.
pub fn learning_curve(
    mut runner: impl FnMut(&EpochSet, usize, usize) -> Result<f64>,
    full_train: &EpochSet,
    ks: &[usize],
    reps: usize,
    seed: u64,
) -> Result<Vec<CurvePoint>> {
    if let Some(&k) = ks.iter().find(|&&k| k > full_train.len()) {
        return Err(Error::Parameter(format!(
            "training size {k} exceeds the {} available trials",
            full_train.len()
        )));
    }
    let mut out = Vec::with_capacity(ks.len());
    for &k in ks {
        let mut values = Vec::with_capacity(reps);
        for rep in 0..reps {
            let mut rng = rng::stream(seed, "subsample", &[k as u64, rep as u64]);
            let subset = subsample_training(full_train, k, &mut rng)?;
            let v = runner(&subset, k, rep).map_err(|e| Error::Runner {
                k,
                rep,
                source: Box::new(e),
            })?;
            values.push(v);
        }
        out.push(CurvePoint {
            k,
            summary: summarize(&values)?,
        });
    }
    Ok(out)
}
