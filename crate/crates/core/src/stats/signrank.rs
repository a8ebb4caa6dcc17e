//! Wilcoxon signed-rank test for paired samples.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

use super::metrics::average_ranks;

/// Largest number of nonzero differences handled by exact enumeration.
pub const EXACT_MAX_N: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignRankMethod {
    /// Exact for n <= [`EXACT_MAX_N`], normal approximation above.
    Auto,
    Exact,
    Normal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignRank {
    /// Sum of ranks of the positive differences `x - y`.
    pub w_plus: f64,
    /// Number of nonzero differences.
    pub n: usize,
    /// Two-tailed p-value.
    pub p: f64,
    pub exact: bool,
}

pub fn signrank_test(x: &[f64], y: &[f64]) -> Result<SignRank> {
    signrank_test_with(x, y, SignRankMethod::Auto)
}

pub fn signrank_test_with(x: &[f64], y: &[f64], method: SignRankMethod) -> Result<SignRank> {
    if x.len() != y.len() {
        return Err(Error::Metric(format!(
            "paired samples of lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    let diffs: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    if diffs.iter().any(|d| d.is_nan()) {
        return Err(Error::Metric("NaN in paired samples".into()));
    }
    if diffs.is_empty() {
        return Err(Error::DegenerateTest("all paired differences are zero".into()));
    }
    let ranks = average_ranks(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let n = diffs.len();
    let w_plus: f64 = ranks
        .iter()
        .zip(&diffs)
        .filter(|(_, d)| **d > 0.0)
        .map(|(r, _)| r)
        .sum();
    let exact = match method {
        SignRankMethod::Auto => n <= EXACT_MAX_N,
        SignRankMethod::Exact => true,
        SignRankMethod::Normal => false,
    };
    if exact && n > 24 {
        return Err(Error::Parameter(format!(
            "exact enumeration over {n} differences is infeasible"
        )));
    }
    let p = if exact {
        exact_p(&ranks, w_plus)
    } else {
        normal_p(&ranks, w_plus)
    };
    Ok(SignRank { w_plus, n, p, exact })
}

/// Enumerates all 2^n sign assignments. Ranks are half-integers, so doubled
/// ranks are compared as integers.
fn exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    let r2: Vec<u64> = ranks.iter().map(|r| (2.0 * r).round() as u64).collect();
    let w2 = (2.0 * w_plus).round() as u64;
    let n = ranks.len();
    let total = 1u64 << n;
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0..total {
        let s: u64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| r2[i]).sum();
        if s <= w2 {
            le += 1;
        }
        if s >= w2 {
            ge += 1;
        }
    }
    let tail = le.min(ge) as f64 / total as f64;
    (2.0 * tail).min(1.0)
}

/// Normal approximation with tie-corrected variance and continuity correction.
fn normal_p(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie += t * t * t - t;
        i = j;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * (1.0 - normal.cdf(z))).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_positive_differences() {
        let r = signrank_test(&[1.0, 2.0, 3.0], &[0.0; 3]).unwrap();
        assert_eq!(r.w_plus, 6.0);
        assert!(r.exact);
        assert_eq!(r.p, 0.25);
    }

    #[test]
    fn identical_samples_are_degenerate() {
        let x = [0.3, 0.5, 0.9];
        assert!(matches!(signrank_test(&x, &x), Err(Error::DegenerateTest(_))));
    }

    #[test]
    fn ten_all_positive() {
        let x: Vec<f64> = (0..10).map(|i| 0.5 + 0.01 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v - 0.1).collect();
        let r = signrank_test(&x, &y).unwrap();
        assert!((r.p - 2.0 / 1024.0).abs() < 1e-15);
    }

    #[test]
    fn zeros_dropped() {
        let r = signrank_test(&[1.0, 2.0, 3.0, 5.0], &[0.0, 0.0, 0.0, 5.0]).unwrap();
        assert_eq!(r.n, 3);
    }

    #[test]
    fn large_n_uses_normal() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = (0..20)
            .map(|i| i as f64 + if i % 3 == 0 { 0.5 } else { -0.25 })
            .collect();
        let r = signrank_test(&x, &y).unwrap();
        assert!(!r.exact && r.p > 0.0 && r.p <= 1.0);
    }
}
