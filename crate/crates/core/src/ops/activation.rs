//! ELU activation and inverted dropout.

use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::Mode;

#[inline]
pub fn elu_scalar(x: f64, alpha: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        alpha * x.exp_m1()
    }
}

/// Element-wise `x` for `x > 0`, `alpha * (e^x - 1)` otherwise.
pub fn elu(x: &Tensor, alpha: f64) -> Tensor {
    let mut y = x.clone();
    y.data_mut().iter_mut().for_each(|v| *v = elu_scalar(*v, alpha));
    y
}

/// Uses the forward output: the derivative is 1 for `x > 0` and `y + alpha` otherwise.
pub fn elu_backward(grad: &Tensor, x: &Tensor, y: &Tensor, alpha: f64) -> Tensor {
    let mut dx = grad.clone();
    for ((d, &xv), &yv) in dx.data_mut().iter_mut().zip(x.data()).zip(y.data()) {
        if xv <= 0.0 {
            *d *= yv + alpha;
        }
    }
    dx
}

/// Per-element scale factors: `0` for dropped elements, `1 / (1 - p)` for survivors.
pub fn dropout_mask(len: usize, p: f64, rng: &mut impl Rng) -> Result<Vec<f64>> {
    check_probability(p)?;
    let keep = 1.0 / (1.0 - p);
    Ok((0..len)
        .map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep })
        .collect())
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Parameter(format!(
            "dropout probability must lie in [0, 1), got {p}"
        )));
    }
    Ok(())
}

pub fn apply_mask(x: &Tensor, mask: &[f64]) -> Tensor {
    let mut y = x.clone();
    y.data_mut().iter_mut().zip(mask).for_each(|(v, m)| *v *= m);
    y
}

/// Inverted dropout. Inference mode is the identity.
pub fn dropout(x: &Tensor, p: f64, mode: Mode, rng: &mut impl Rng) -> Result<Tensor> {
    check_probability(p)?;
    match mode {
        Mode::Infer => Ok(x.clone()),
        Mode::Train if p == 0.0 => Ok(x.clone()),
        Mode::Train => {
            let mask = dropout_mask(x.len(), p, rng)?;
            Ok(apply_mask(x, &mask))
        }
    }
}
