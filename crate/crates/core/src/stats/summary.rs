use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean and standard error of per-fold (or per-repetition) metric values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub values: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator) over sqrt(n).
    pub stderr: f64,
}

pub fn summarize(values: &[f64]) -> Result<MetricSummary> {
    let n = values.len();
    if n < 2 {
        return Err(Error::Metric(format!(
            "standard error needs at least 2 values, got {n}"
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Metric("non-finite metric value".into()));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let sd = (ss / (n - 1) as f64).sqrt();
    Ok(MetricSummary {
        values: values.to_vec(),
        mean,
        stderr: sd / (n as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let s = summarize(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert!((s.stderr - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(summarize(&[0.7; 5]).unwrap().stderr, 0.0);
        let s = summarize(&[0.5, 0.7]).unwrap();
        assert!((s.mean - 0.6).abs() < 1e-15 && (s.stderr - 0.1).abs() < 1e-12);
        assert!(matches!(summarize(&[1.0]), Err(Error::Metric(_))));
    }
}
