//! Axis swap, flatten, affine map, softmax and cross-entropy.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Smallest probability fed to the logarithm in [`cross_entropy`].
pub const PROB_FLOOR: f64 = 1e-300;

/// Swaps the first two axes of a rank-3 tensor when one of them has extent 1,
/// a pure re-indexing (`F x 1 x T <-> 1 x F x T`).
pub fn transpose_swap(x: &Tensor) -> Result<Tensor> {
    let s = x.shape();
    if s.len() != 3 {
        return Err(Error::Shape(format!("transpose expects rank 3, got {s:?}")));
    }
    if s[0] != 1 && s[1] != 1 {
        return Err(Error::Shape(format!(
            "transpose needs a unit extent on axis 0 or 1, got {s:?}"
        )));
    }
    x.clone().reshape(&[s[1], s[0], s[2]])
}

/// Batched `y = x W^T + b` with `x: [B, D]`, `W: [N, D]`, `b: [N]`.
pub fn affine_batch(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    if x.ndim() != 2 || w.ndim() != 2 || b.ndim() != 1 {
        return Err(Error::Dimension(format!(
            "affine expects x [B, D], W [N, D], b [N]; got {:?}, {:?}, {:?}",
            x.shape(),
            w.shape(),
            b.shape()
        )));
    }
    let (bs, d) = (x.shape()[0], x.shape()[1]);
    let n = w.shape()[0];
    if w.shape()[1] != d {
        return Err(Error::Dimension(format!(
            "weights axis 1 is {} but input feature length is {d}",
            w.shape()[1]
        )));
    }
    if b.len() != n {
        return Err(Error::Dimension(format!(
            "bias length {} differs from {n} output units",
            b.len()
        )));
    }
    let mut out = Vec::with_capacity(bs * n);
    for row in x.data().chunks_exact(d) {
        for k in 0..n {
            out.push(b.data()[k] + super::conv::dot(row, &w.data()[k * d..(k + 1) * d]));
        }
    }
    Tensor::new(vec![bs, n], out)
}

/// Returns `(dx, dW, db)`.
pub fn affine_batch_backward(grad: &Tensor, x: &Tensor, w: &Tensor) -> Result<(Tensor, Tensor, Tensor)> {
    let (bs, d) = (x.shape()[0], x.shape()[1]);
    let n = w.shape()[0];
    if grad.shape() != [bs, n] {
        return Err(Error::Dimension(format!(
            "affine upstream gradient {:?} does not match [{bs}, {n}]",
            grad.shape()
        )));
    }
    let mut dx = vec![0.0; bs * d];
    let mut dw = vec![0.0; n * d];
    let mut db = vec![0.0; n];
    for i in 0..bs {
        let xr = &x.data()[i * d..(i + 1) * d];
        let dxr = &mut dx[i * d..(i + 1) * d];
        for k in 0..n {
            let g = grad.data()[i * n + k];
            db[k] += g;
            let wr = &w.data()[k * d..(k + 1) * d];
            let dwr = &mut dw[k * d..(k + 1) * d];
            for j in 0..d {
                dwr[j] += g * xr[j];
                dxr[j] += g * wr[j];
            }
        }
    }
    Ok((
        Tensor::new(vec![bs, d], dx)?,
        Tensor::new(vec![n, d], dw)?,
        Tensor::new(vec![n], db)?,
    ))
}

/// Numerically safe softmax of one logit row.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|v| (v - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    logits.iter().map(|v| v - lse).collect()
}

/// Row-wise softmax of `[B, N]` logits.
pub fn softmax_rows(logits: &Tensor) -> Tensor {
    let n = *logits.shape().last().expect("rank >= 1");
    let data = logits.data().chunks_exact(n).flat_map(softmax).collect();
    Tensor::new(logits.shape().to_vec(), data).expect("shape preserved")
}

/// Softmax regression on one flattened feature vector: probabilities of length N.
pub fn affine_softmax(x: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Vec<f64>> {
    let d = x.len();
    let logits = affine_batch(&x.clone().reshape(&[1, d])?, weights, bias)?;
    Ok(softmax(logits.data()))
}

/// `-ln p[label]`, with the probability floored at [`PROB_FLOOR`].
pub fn cross_entropy(probs: &[f64], label: usize) -> Result<f64> {
    let p = probs.get(label).ok_or(Error::Index {
        index: label,
        len: probs.len(),
    })?;
    Ok(-p.max(PROB_FLOOR).ln())
}

/// Trainable parameters of the affine layer, `N * D + N`.
pub fn affine_param_count(inputs: usize, outputs: usize) -> usize {
    outputs * inputs + outputs
}
