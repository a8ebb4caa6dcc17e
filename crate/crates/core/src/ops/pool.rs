use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Non-overlapping max pooling over the last two axes of `[B, F, H, W]`.
/// Returns the pooled tensor and the flat input index of each window's maximum.
pub fn maxpool2d_batch(x: &Tensor, pool: (usize, usize)) -> Result<(Tensor, Vec<usize>)> {
    if x.ndim() != 4 {
        return Err(Error::Dimension(format!(
            "max pool input must be (batch, maps, height, width), got {:?}",
            x.shape()
        )));
    }
    let (b, f, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    let (ph, pw) = pool;
    if ph == 0 || pw == 0 {
        return Err(Error::Parameter("pool extents must be positive".into()));
    }
    if h % ph != 0 {
        return Err(Error::Divisibility {
            axis: "height",
            extent: h,
            divisor: ph,
        });
    }
    if w % pw != 0 {
        return Err(Error::Divisibility {
            axis: "width",
            extent: w,
            divisor: pw,
        });
    }
    let (oh, ow) = (h / ph, w / pw);
    let xd = x.data();
    let mut out = Vec::with_capacity(b * f * oh * ow);
    let mut argmax = Vec::with_capacity(b * f * oh * ow);
    for map in 0..b * f {
        let base = map * h * w;
        for i in 0..oh {
            for j in 0..ow {
                let mut best = base + i * ph * w + j * pw;
                for u in 0..ph {
                    let row = base + (i * ph + u) * w + j * pw;
                    for idx in row..row + pw {
                        if xd[idx] > xd[best] {
                            best = idx;
                        }
                    }
                }
                out.push(xd[best]);
                argmax.push(best);
            }
        }
    }
    Ok((Tensor::new(vec![b, f, oh, ow], out)?, argmax))
}

pub fn maxpool2d_batch_backward(grad: &Tensor, input_shape: &[usize], argmax: &[usize]) -> Result<Tensor> {
    if grad.len() != argmax.len() {
        return Err(Error::Dimension(format!(
            "pool gradient has {} elements, forward produced {}",
            grad.len(),
            argmax.len()
        )));
    }
    let mut dx = Tensor::zeros(input_shape);
    let d = dx.data_mut();
    for (&g, &i) in grad.data().iter().zip(argmax) {
        d[i] += g;
    }
    Ok(dx)
}

/// Single-sample pooling of an `F x H x W` tensor.
pub fn maxpool2d(x: &Tensor, pool: (usize, usize)) -> Result<Tensor> {
    if x.ndim() != 3 {
        return Err(Error::Dimension(format!(
            "max pool input must be (maps, height, width), got {:?}",
            x.shape()
        )));
    }
    maxpool2d_batch(&x.clone().unsqueeze0(), pool)?.0.squeeze0()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_shape_and_single_window() {
        let y = maxpool2d(&Tensor::zeros(&[4, 16, 128]), (2, 4)).unwrap();
        assert_eq!(y.shape(), &[4, 8, 32]);
        let w = Tensor::new(vec![1, 2, 4], (1..=8).map(f64::from).collect()).unwrap();
        assert_eq!(maxpool2d(&w, (2, 4)).unwrap().data(), &[8.0]);
    }

    #[test]
    fn non_divisible_extents() {
        assert!(matches!(
            maxpool2d(&Tensor::zeros(&[1, 3, 8]), (2, 4)),
            Err(Error::Divisibility { axis: "height", .. })
        ));
        assert!(matches!(
            maxpool2d(&Tensor::zeros(&[1, 4, 6]), (2, 4)),
            Err(Error::Divisibility { axis: "width", .. })
        ));
    }
}
