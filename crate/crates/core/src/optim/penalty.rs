use crate::tensor::Tensor;

/// Elastic-net penalty `l1 * sum|w| + l2 * sum w^2`.
pub fn elastic_net_penalty(weights: &Tensor, l1: f64, l2: f64) -> f64 {
    weights.data().iter().map(|w| l1 * w.abs() + l2 * w * w).sum()
}

/// Per-element subgradient of the penalty; the L1 part is 0 at exactly 0.
#[inline]
pub fn elastic_net_subgradient(w: f64, l1: f64, l2: f64) -> f64 {
    let sign = if w > 0.0 {
        1.0
    } else if w < 0.0 {
        -1.0
    } else {
        0.0
    };
    l1 * sign + 2.0 * l2 * w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn penalty_values() {
        assert_eq!(elastic_net_penalty(&Tensor::zeros(&[3, 3]), 1e-4, 1e-4), 0.0);
        let w = Tensor::new(vec![2], vec![1.0, -1.0]).unwrap();
        assert!((elastic_net_penalty(&w, 1e-4, 1e-4) - 4e-4).abs() < 1e-18);
        assert_eq!(elastic_net_penalty(&Tensor::scalar(3.0), 0.0, 1.0), 9.0);
    }

    #[test]
    fn subgradient_sign_convention() {
        assert_eq!(elastic_net_subgradient(0.0, 0.5, 0.5), 0.0);
        assert_eq!(elastic_net_subgradient(2.0, 0.5, 0.25), 1.5);
        assert_eq!(elastic_net_subgradient(-2.0, 0.5, 0.25), -1.5);
    }
}
