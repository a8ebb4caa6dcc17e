use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Average 1-based ranks of `values` in ascending order; ties share the mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) share ranks i+1..=j
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

/// Area under the ROC curve via the rank-sum statistic; ties count one half.
pub fn auc(scores: &[f64], labels: &[usize]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Metric(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(l) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::Metric(format!("AUC needs binary labels, got {l}")));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Metric("NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Metric("AUC needs both classes present".into()));
    }
    let ranks = average_ranks(scores);
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l == 1).map(|(r, _)| r).sum();
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

pub fn multiclass_accuracy(predicted: &[usize], actual: &[usize]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::Metric(format!(
            "{} predictions but {} labels",
            predicted.len(),
            actual.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::Metric("accuracy of an empty set".into()));
    }
    let hits = predicted.iter().zip(actual).filter(|(p, a)| p == a).count();
    Ok(hits as f64 / predicted.len() as f64)
}

/// Index of the largest entry of each row; the first wins on ties.
pub fn argmax_rows(probs: &Tensor) -> Vec<usize> {
    let n = probs.shape()[1];
    probs
        .data()
        .chunks_exact(n)
        .map(|row| {
            row.iter()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) },
                )
                .0
        })
        .collect()
}

/// Summary metric of a classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Area under the ROC curve of the class-1 probability (two classes only).
    Auc,
    Accuracy,
}

impl Metric {
    /// Scores `[B, N]` class probabilities against labels.
    pub fn evaluate(self, probs: &Tensor, labels: &[usize]) -> Result<f64> {
        if probs.ndim() != 2 || probs.shape()[0] != labels.len() {
            return Err(Error::Metric(format!(
                "probabilities {:?} do not match {} labels",
                probs.shape(),
                labels.len()
            )));
        }
        match self {
            Metric::Auc => {
                if probs.shape()[1] != 2 {
                    return Err(Error::Metric(format!("AUC needs 2 classes, got {}", probs.shape()[1])));
                }
                let scores: Vec<f64> = probs.data().chunks_exact(2).map(|r| r[1]).collect();
                auc(&scores, labels)
            }
            Metric::Accuracy => multiclass_accuracy(&argmax_rows(probs), labels),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Metric::Auc => "auc",
            Metric::Accuracy => "accuracy",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auc" => Ok(Metric::Auc),
            "accuracy" => Ok(Metric::Accuracy),
            _ => Err(Error::Metric(format!("unknown metric `{s}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap(), 0.75);
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(auc(&[0.3; 6], &[0, 1, 0, 1, 1, 0]).unwrap(), 0.5);
        assert!(matches!(auc(&[0.1, 0.2], &[1, 1]), Err(Error::Metric(_))));
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(multiclass_accuracy(&[0, 1, 2, 3], &[0, 1, 0, 0]).unwrap(), 0.5);
        assert_eq!(multiclass_accuracy(&[2], &[1]).unwrap(), 0.0);
        assert!(multiclass_accuracy(&[1, 2], &[1]).is_err());
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn metric_over_probabilities() {
        let p = Tensor::new(vec![3, 2], vec![0.9, 0.1, 0.2, 0.8, 0.6, 0.4]).unwrap();
        assert_eq!(Metric::Accuracy.evaluate(&p, &[0, 1, 1]).unwrap(), 2.0 / 3.0);
        assert_eq!(Metric::Auc.evaluate(&p, &[0, 1, 1]).unwrap(), 1.0);
    }
}
