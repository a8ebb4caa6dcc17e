//! Batch normalization over `[B, F, ...]` tensors, per feature map.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::Mode;

pub const BN_EPSILON: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// Running mean and variance used at inference time. Not trainable.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl RunningStats {
    pub fn new(features: usize) -> Self {
        RunningStats {
            mean: vec![0.0; features],
            var: vec![1.0; features],
        }
    }

    /// `old * (1 - momentum) + batch * momentum`.
    pub fn update(&mut self, batch: &BatchStats, momentum: f64) {
        for (r, b) in self.mean.iter_mut().zip(&batch.mean) {
            *r = (1.0 - momentum) * *r + momentum * b;
        }
        for (r, b) in self.var.iter_mut().zip(&batch.var) {
            *r = (1.0 - momentum) * *r + momentum * b;
        }
    }
}

/// Per-feature statistics of one training batch (biased variance).
#[derive(Debug, Clone, PartialEq)]
pub struct BatchStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

/// Saved forward state for the backward pass.
#[derive(Debug, Clone)]
pub struct BnCache {
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
    /// `true` when statistics came from the batch itself.
    batch_stats: bool,
}

fn dims(x: &Tensor, gamma: &Tensor, beta: &Tensor) -> Result<(usize, usize, usize)> {
    if x.ndim() < 2 {
        return Err(Error::Dimension(format!(
            "batch norm input needs (batch, features, ...), got {:?}",
            x.shape()
        )));
    }
    let (b, f) = (x.shape()[0], x.shape()[1]);
    if gamma.len() != f || beta.len() != f {
        return Err(Error::Dimension(format!(
            "gamma/beta extents {}/{} differ from feature-map count {f}",
            gamma.len(),
            beta.len()
        )));
    }
    let s = x.len() / (b * f);
    Ok((b, f, s))
}

/// Forward pass. In train mode returns the batch statistics the caller should
/// fold into its running statistics.
pub fn batchnorm_batch(
    x: &Tensor,
    gamma: &Tensor,
    beta: &Tensor,
    running: &RunningStats,
    mode: Mode,
    eps: f64,
) -> Result<(Tensor, BnCache, Option<BatchStats>)> {
    let (b, f, s) = dims(x, gamma, beta)?;
    let xd = x.data();
    let (mean, var, stats) = match mode {
        Mode::Train => {
            if b < 2 {
                return Err(Error::DegenerateBatch(format!(
                    "train-mode batch norm needs at least 2 items, got {b}"
                )));
            }
            let m = (b * s) as f64;
            let mut mean = vec![0.0; f];
            let mut var = vec![0.0; f];
            for n in 0..b {
                for (fi, mu) in mean.iter_mut().enumerate() {
                    let o = (n * f + fi) * s;
                    *mu += xd[o..o + s].iter().sum::<f64>();
                }
            }
            mean.iter_mut().for_each(|v| *v /= m);
            for n in 0..b {
                for fi in 0..f {
                    let o = (n * f + fi) * s;
                    let mu = mean[fi];
                    var[fi] += xd[o..o + s].iter().map(|v| (v - mu) * (v - mu)).sum::<f64>();
                }
            }
            var.iter_mut().for_each(|v| *v /= m);
            let stats = BatchStats {
                mean: mean.clone(),
                var: var.clone(),
            };
            (mean, var, Some(stats))
        }
        Mode::Infer => (running.mean.clone(), running.var.clone(), None),
    };
    if mean.len() != f {
        return Err(Error::Dimension(format!(
            "running statistics cover {} features, input has {f}",
            mean.len()
        )));
    }
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
    let mut xhat = vec![0.0; x.len()];
    let mut out = vec![0.0; x.len()];
    for n in 0..b {
        for fi in 0..f {
            let o = (n * f + fi) * s;
            let (mu, is, g, bt) = (mean[fi], inv_std[fi], gamma.data()[fi], beta.data()[fi]);
            for j in o..o + s {
                let h = (xd[j] - mu) * is;
                xhat[j] = h;
                out[j] = g * h + bt;
            }
        }
    }
    let cache = BnCache {
        xhat,
        inv_std,
        batch_stats: mode == Mode::Train,
    };
    Ok((Tensor::new(x.shape().to_vec(), out)?, cache, stats))
}

/// Returns `(dx, dgamma, dbeta)`.
pub fn batchnorm_batch_backward(grad: &Tensor, gamma: &Tensor, cache: &BnCache) -> Result<(Tensor, Tensor, Tensor)> {
    let b = grad.shape()[0];
    let f = gamma.len();
    if grad.ndim() < 2 || grad.shape()[1] != f || grad.len() != cache.xhat.len() {
        return Err(Error::Dimension(format!(
            "batch norm upstream gradient {:?} does not match cached forward",
            grad.shape()
        )));
    }
    let s = grad.len() / (b * f);
    let gd = grad.data();
    let mut dgamma = vec![0.0; f];
    let mut dbeta = vec![0.0; f];
    for n in 0..b {
        for fi in 0..f {
            let o = (n * f + fi) * s;
            for (g, xh) in gd[o..o + s].iter().zip(&cache.xhat[o..o + s]) {
                dbeta[fi] += g;
                dgamma[fi] += g * xh;
            }
        }
    }
    let mut dx = vec![0.0; grad.len()];
    if cache.batch_stats {
        // differentiate through the batch mean and variance
        let m = (b * s) as f64;
        for n in 0..b {
            for fi in 0..f {
                let o = (n * f + fi) * s;
                let k = gamma.data()[fi] * cache.inv_std[fi] / m;
                for j in o..o + s {
                    dx[j] = k * (m * gd[j] - dbeta[fi] - cache.xhat[j] * dgamma[fi]);
                }
            }
        }
    } else {
        for n in 0..b {
            for fi in 0..f {
                let o = (n * f + fi) * s;
                let k = gamma.data()[fi] * cache.inv_std[fi];
                for j in o..o + s {
                    dx[j] = k * gd[j];
                }
            }
        }
    }
    Ok((
        Tensor::new(grad.shape().to_vec(), dx)?,
        Tensor::new(vec![f], dgamma)?,
        Tensor::new(vec![f], dbeta)?,
    ))
}

/// Normalizes `x` (`batch x F x ...`) and, in train mode, folds the batch
/// statistics into `state` with momentum [`BN_MOMENTUM`].
pub fn batchnorm_forward(
    x: &Tensor,
    gamma: &Tensor,
    beta: &Tensor,
    state: &mut RunningStats,
    mode: Mode,
) -> Result<Tensor> {
    let (y, _, stats) = batchnorm_batch(x, gamma, beta, state, mode, BN_EPSILON)?;
    if let Some(stats) = stats {
        state.update(&stats, BN_MOMENTUM);
    }
    Ok(y)
}

/// Trainable parameters of a batch-norm layer over `features` maps (gamma and beta).
pub fn batchnorm_param_count(features: usize) -> usize {
    2 * features
}
