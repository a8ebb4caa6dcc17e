//! Spatial (full-height channel) convolution and same-padded 2-D cross-correlation.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Gradients of a convolution with respect to its input, weights and bias.
#[derive(Debug, Clone)]
pub struct ConvGrads {
    pub input: Tensor,
    pub weight: Tensor,
    pub bias: Tensor,
}

fn check_rank(t: &Tensor, rank: usize, what: &str) -> Result<()> {
    if t.ndim() != rank {
        return Err(Error::Dimension(format!(
            "{what} must have rank {rank}, got shape {:?}",
            t.shape()
        )));
    }
    Ok(())
}

fn spatial_dims(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<(usize, usize, usize, usize)> {
    check_rank(x, 3, "spatial conv input (batch, channels, time)")?;
    check_rank(w, 2, "spatial conv weights (filters, channels)")?;
    check_rank(b, 1, "spatial conv bias")?;
    let (bs, c, t) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (f, wc) = (w.shape()[0], w.shape()[1]);
    if wc != c {
        return Err(Error::Dimension(format!(
            "weights axis 1 (channels) is {wc} but input axis 1 (channels) is {c}"
        )));
    }
    if b.len() != f {
        return Err(Error::Dimension(format!(
            "bias axis 0 is {} but weights axis 0 (filters) is {f}",
            b.len()
        )));
    }
    Ok((bs, c, t, f))
}

/// Batched spatial filter: `[B, C, T] -> [B, F, 1, T]`.
pub fn spatial_conv_batch(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (bs, c, t, f) = spatial_dims(x, w, b)?;
    let mut out = vec![0.0; bs * f * t];
    let (xd, wd) = (x.data(), w.data());
    for n in 0..bs {
        let xn = &xd[n * c * t..(n + 1) * c * t];
        for fi in 0..f {
            let row = &mut out[(n * f + fi) * t..(n * f + fi + 1) * t];
            row.fill(b.data()[fi]);
            for ci in 0..c {
                let wv = wd[fi * c + ci];
                let xr = &xn[ci * t..(ci + 1) * t];
                for (o, &xv) in row.iter_mut().zip(xr) {
                    *o += wv * xv;
                }
            }
        }
    }
    Tensor::new(vec![bs, f, 1, t], out)
}

pub fn spatial_conv_batch_backward(grad: &Tensor, x: &Tensor, w: &Tensor) -> Result<ConvGrads> {
    let b0 = Tensor::zeros(&[w.shape()[0]]);
    let (bs, c, t, f) = spatial_dims(x, w, &b0)?;
    if grad.shape() != [bs, f, 1, t] {
        return Err(Error::Dimension(format!(
            "upstream gradient {:?} does not match output [{bs}, {f}, 1, {t}]",
            grad.shape()
        )));
    }
    let (gd, xd, wd) = (grad.data(), x.data(), w.data());
    let mut dx = vec![0.0; bs * c * t];
    let mut dw = vec![0.0; f * c];
    let mut db = vec![0.0; f];
    for n in 0..bs {
        for fi in 0..f {
            let g = &gd[(n * f + fi) * t..(n * f + fi + 1) * t];
            db[fi] += g.iter().sum::<f64>();
            for ci in 0..c {
                let xr = &xd[(n * c + ci) * t..(n * c + ci + 1) * t];
                dw[fi * c + ci] += dot(g, xr);
                let wv = wd[fi * c + ci];
                let dxr = &mut dx[(n * c + ci) * t..(n * c + ci + 1) * t];
                for (d, &gv) in dxr.iter_mut().zip(g) {
                    *d += wv * gv;
                }
            }
        }
    }
    Ok(ConvGrads {
        input: Tensor::new(vec![bs, c, t], dx)?,
        weight: Tensor::new(vec![f, c], dw)?,
        bias: Tensor::new(vec![f], db)?,
    })
}

/// Single-trial spatial filter: `x` is `C x T`, `weights` is `F x C`; output `F x 1 x T`.
pub fn spatial_conv_forward(x: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    check_rank(x, 2, "spatial conv input (channels, time)")?;
    spatial_conv_batch(&x.clone().unsqueeze0(), weights, bias)?.squeeze0()
}

/// Leading zero padding for a kernel extent; the remainder goes after.
pub fn same_pad(k: usize) -> usize {
    (k - 1) / 2
}

struct Conv2dDims {
    bs: usize,
    fin: usize,
    h: usize,
    w: usize,
    fout: usize,
    kh: usize,
    kw: usize,
}

fn conv2d_dims(x: &Tensor, k: &Tensor, b: Option<&Tensor>) -> Result<Conv2dDims> {
    check_rank(x, 4, "conv2d input (batch, maps, height, width)")?;
    check_rank(k, 4, "conv2d kernels (out, in, kh, kw)")?;
    let s = x.shape();
    let ks = k.shape();
    if ks[1] != s[1] {
        return Err(Error::Dimension(format!(
            "kernel axis 1 (input maps) is {} but input axis 1 (maps) is {}",
            ks[1], s[1]
        )));
    }
    if let Some(b) = b {
        if b.ndim() != 1 || b.len() != ks[0] {
            return Err(Error::Dimension(format!(
                "bias shape {:?} does not match {} output maps",
                b.shape(),
                ks[0]
            )));
        }
    }
    Ok(Conv2dDims {
        bs: s[0],
        fin: s[1],
        h: s[2],
        w: s[3],
        fout: ks[0],
        kh: ks[2],
        kw: ks[3],
    })
}

/// Columns `j` of the output for which tap `v` reads a column inside the input.
#[inline]
fn tap_range(v: usize, pad: usize, width: usize) -> (usize, usize) {
    // reads input column j + v - pad
    let lo = pad.saturating_sub(v);
    let hi = (width + pad).saturating_sub(v).min(width);
    if lo >= hi {
        (0, 0)
    } else {
        (lo, hi)
    }
}

/// Batched same-padded cross-correlation: `[B, Fin, H, W] -> [B, Fout, H, W]`.
pub fn conv2d_same_batch(x: &Tensor, k: &Tensor, b: &Tensor) -> Result<Tensor> {
    let d = conv2d_dims(x, k, Some(b))?;
    let (pt, pl) = (same_pad(d.kh), same_pad(d.kw));
    let plane = d.h * d.w;
    let mut out = vec![0.0; d.bs * d.fout * plane];
    let (xd, kd) = (x.data(), k.data());
    for n in 0..d.bs {
        for o in 0..d.fout {
            let out_map = &mut out[(n * d.fout + o) * plane..(n * d.fout + o + 1) * plane];
            out_map.fill(b.data()[o]);
            for ci in 0..d.fin {
                let in_map = &xd[(n * d.fin + ci) * plane..(n * d.fin + ci + 1) * plane];
                let kbase = (o * d.fin + ci) * d.kh * d.kw;
                for u in 0..d.kh {
                    for i in 0..d.h {
                        let r = i + u;
                        if r < pt || r - pt >= d.h {
                            continue;
                        }
                        let src = &in_map[(r - pt) * d.w..(r - pt + 1) * d.w];
                        let dst = &mut out_map[i * d.w..(i + 1) * d.w];
                        for v in 0..d.kw {
                            let wv = kd[kbase + u * d.kw + v];
                            let (lo, hi) = tap_range(v, pl, d.w);
                            if lo == hi {
                                continue;
                            }
                            let s0 = lo + v - pl;
                            for (o, &xv) in dst[lo..hi].iter_mut().zip(&src[s0..s0 + (hi - lo)]) {
                                *o += wv * xv;
                            }
                        }
                    }
                }
            }
        }
    }
    Tensor::new(vec![d.bs, d.fout, d.h, d.w], out)
}

pub fn conv2d_same_batch_backward(grad: &Tensor, x: &Tensor, k: &Tensor) -> Result<ConvGrads> {
    let d = conv2d_dims(x, k, None)?;
    if grad.shape() != [d.bs, d.fout, d.h, d.w] {
        return Err(Error::Dimension(format!(
            "upstream gradient {:?} does not match output [{}, {}, {}, {}]",
            grad.shape(),
            d.bs,
            d.fout,
            d.h,
            d.w
        )));
    }
    let (pt, pl) = (same_pad(d.kh), same_pad(d.kw));
    let plane = d.h * d.w;
    let (gd, xd, kd) = (grad.data(), x.data(), k.data());
    let mut dx = vec![0.0; x.len()];
    let mut dk = vec![0.0; k.len()];
    let mut db = vec![0.0; d.fout];
    for n in 0..d.bs {
        for o in 0..d.fout {
            let g_map = &gd[(n * d.fout + o) * plane..(n * d.fout + o + 1) * plane];
            db[o] += g_map.iter().sum::<f64>();
            for ci in 0..d.fin {
                let in_off = (n * d.fin + ci) * plane;
                let kbase = (o * d.fin + ci) * d.kh * d.kw;
                for u in 0..d.kh {
                    for i in 0..d.h {
                        let r = i + u;
                        if r < pt || r - pt >= d.h {
                            continue;
                        }
                        let row = in_off + (r - pt) * d.w;
                        let g_row = &g_map[i * d.w..(i + 1) * d.w];
                        for v in 0..d.kw {
                            let (lo, hi) = tap_range(v, pl, d.w);
                            if lo == hi {
                                continue;
                            }
                            let s0 = lo + v - pl;
                            let len = hi - lo;
                            let idx = kbase + u * d.kw + v;
                            dk[idx] += dot(&g_row[lo..hi], &xd[row + s0..row + s0 + len]);
                            let wv = kd[idx];
                            for (dv, &gv) in dx[row + s0..row + s0 + len].iter_mut().zip(&g_row[lo..hi]) {
                                *dv += wv * gv;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(ConvGrads {
        input: Tensor::new(x.shape().to_vec(), dx)?,
        weight: Tensor::new(k.shape().to_vec(), dk)?,
        bias: Tensor::new(vec![d.fout], db)?,
    })
}

/// Single-sample same-padded cross-correlation: `Fin x H x W -> Fout x H x W`.
pub fn conv2d_same_forward(x: &Tensor, kernels: &Tensor, bias: &Tensor) -> Result<Tensor> {
    check_rank(x, 3, "conv2d input (maps, height, width)")?;
    conv2d_same_batch(&x.clone().unsqueeze0(), kernels, bias)?.squeeze0()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    fn random(shape: &[usize], rng: &mut impl Rng) -> Tensor {
        Tensor::from_fn(shape, |_| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn spatial_output_shape() {
        let x = Tensor::zeros(&[64, 128]);
        let y = spatial_conv_forward(&x, &Tensor::zeros(&[16, 64]), &Tensor::zeros(&[16])).unwrap();
        assert_eq!(y.shape(), &[16, 1, 128]);
    }

    #[test]
    fn one_hot_weights_select_channel() {
        let mut rng = stream(0, "test", &[]);
        let x = random(&[5, 9], &mut rng);
        let mut w = Tensor::zeros(&[2, 5]);
        w.set(&[0, 3], 1.0);
        w.set(&[1, 0], 1.0);
        let y = spatial_conv_forward(&x, &w, &Tensor::zeros(&[2])).unwrap();
        for t in 0..9 {
            assert_eq!(y.get(&[0, 0, t]), x.get(&[3, t]));
            assert_eq!(y.get(&[1, 0, t]), x.get(&[0, t]));
        }
    }

    #[test]
    fn spatial_mismatch_names_axes() {
        let err =
            spatial_conv_forward(&Tensor::zeros(&[3, 5]), &Tensor::zeros(&[2, 4]), &Tensor::zeros(&[2])).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("channels"), "{msg}");
    }

    #[test]
    fn conv2d_table_shape() {
        let x = Tensor::zeros(&[1, 16, 128]);
        let y = conv2d_same_forward(&x, &Tensor::zeros(&[4, 1, 2, 32]), &Tensor::zeros(&[4])).unwrap();
        assert_eq!(y.shape(), &[4, 16, 128]);
    }

    #[test]
    fn identity_kernel() {
        let mut rng = stream(1, "test", &[]);
        let x = random(&[1, 4, 7], &mut rng);
        let y = conv2d_same_forward(&x, &Tensor::full(&[1, 1, 1, 1], 1.0), &Tensor::zeros(&[1])).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn conv2d_input_map_mismatch() {
        let r = conv2d_same_forward(
            &Tensor::zeros(&[2, 4, 4]),
            &Tensor::zeros(&[1, 3, 2, 2]),
            &Tensor::zeros(&[1]),
        );
        assert!(matches!(r, Err(Error::Dimension(_))));
    }

    #[test]
    fn kernel_larger_than_input_is_padded() {
        // 2x32 kernel over a 1x3 plane: every output still sees the whole input
        let x = Tensor::new(vec![1, 1, 3], vec![1.0, 2.0, 3.0]).unwrap();
        let y = conv2d_same_forward(&x, &Tensor::full(&[1, 1, 2, 32], 1.0), &Tensor::zeros(&[1])).unwrap();
        assert_eq!(y.data(), &[6.0, 6.0, 6.0]);
    }
}
