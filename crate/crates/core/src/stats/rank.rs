use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::metrics::average_ranks;

/// Per-dataset ranks of each model (1 = best) and their averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    /// `ranks[model][dataset]`.
    pub ranks: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    /// Standard error of each model's rank across datasets; `None` with a single dataset.
    pub stderr: Vec<Option<f64>>,
}

/// Ranks models within every dataset column. `perf[model][dataset]`.
pub fn rank_models(perf: &[Vec<f64>], higher_is_better: bool) -> Result<RankTable> {
    let n_models = perf.len();
    if n_models < 2 {
        return Err(Error::Data(format!("ranking needs at least 2 models, got {n_models}")));
    }
    let n_data = perf[0].len();
    if n_data == 0 || perf.iter().any(|row| row.len() != n_data) {
        return Err(Error::Data(
            "performance matrix must be rectangular with at least one dataset".into(),
        ));
    }
    if perf.iter().flatten().any(|v| v.is_nan()) {
        return Err(Error::Data("NaN performance cell".into()));
    }
    let mut ranks = vec![vec![0.0; n_data]; n_models];
    for d in 0..n_data {
        let col: Vec<f64> = perf
            .iter()
            .map(|row| if higher_is_better { -row[d] } else { row[d] })
            .collect();
        for (m, r) in average_ranks(&col).into_iter().enumerate() {
            ranks[m][d] = r;
        }
    }
    let mean = ranks.iter().map(|r| r.iter().sum::<f64>() / n_data as f64).collect();
    let stderr = ranks
        .iter()
        .map(|r| super::summarize(r).ok().map(|s| s.stderr))
        .collect();
    Ok(RankTable { ranks, mean, stderr })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let t = rank_models(&[vec![0.9], vec![0.8]], true).unwrap();
        assert_eq!(t.ranks, vec![vec![1.0], vec![2.0]]);
        assert_eq!(t.stderr, vec![None, None]);
        let t = rank_models(&[vec![0.5], vec![0.5]], true).unwrap();
        assert_eq!(t.ranks, vec![vec![1.5], vec![1.5]]);
        let t = rank_models(&[vec![0.1, 0.3], vec![0.2, 0.1]], false).unwrap();
        assert_eq!(t.ranks, vec![vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert_eq!(t.mean, vec![1.5, 1.5]);
        assert!(rank_models(&[vec![f64::NAN], vec![0.1]], true).is_err());
    }
}
