//! Step-up false discovery rate control.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FdrMethod {
    /// Step-up rule valid under independence.
    #[default]
    Independent,
    /// Thresholds divided by the harmonic number of m; valid under arbitrary dependence.
    Dependent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdrResult {
    pub rejected: Vec<bool>,
    /// Adjusted p-values in input order, capped at 1.
    pub adjusted: Vec<f64>,
}

pub fn fdr_correct(pvals: &[f64], q: f64) -> Result<FdrResult> {
    fdr_correct_with(pvals, q, FdrMethod::Independent)
}

pub fn fdr_correct_with(pvals: &[f64], q: f64, method: FdrMethod) -> Result<FdrResult> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Parameter(format!("FDR level {q} outside (0, 1)")));
    }
    if let Some(p) = pvals.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Parameter(format!("p-value {p} outside [0, 1]")));
    }
    let m = pvals.len();
    let c = match method {
        FdrMethod::Independent => 1.0,
        FdrMethod::Dependent => (1..=m).map(|i| 1.0 / i as f64).sum(),
    };
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvals[a].total_cmp(&pvals[b]));
    // largest i with p_(i) <= i q / (m c)
    let cutoff = (1..=m)
        .rev()
        .find(|&i| pvals[order[i - 1]] <= i as f64 * q / (m as f64 * c))
        .unwrap_or(0);
    let mut rejected = vec![false; m];
    for &k in &order[..cutoff] {
        rejected[k] = true;
    }
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for i in (1..=m).rev() {
        let k = order[i - 1];
        running = running.min(pvals[k] * (m as f64 * c / i as f64));
        adjusted[k] = running.min(1.0);
    }
    Ok(FdrResult { rejected, adjusted })
}
