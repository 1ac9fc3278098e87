//! Confusion counts, threshold metrics and ROC-AUC. Positive class = 1.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("{truth} truth labels but {other} predictions or scores")]
    LengthMismatch { truth: usize, other: usize },
    #[error("label {value} at row {row} is not 0 or 1")]
    BadLabel { row: usize, value: u8 },
    #[error("no rows to evaluate")]
    EmptyEval,
    #[error("ROC-AUC needs both classes in the truth labels")]
    SingleClass,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub tpr: f64,
    pub fpr: f64,
}

fn check_labels(y: &[u8]) -> Result<(), MetricError> {
    match y.iter().position(|&v| v > 1) {
        Some(row) => Err(MetricError::BadLabel { row, value: y[row] }),
        None => Ok(()),
    }
}

pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionCounts, MetricError> {
    if y_true.len() != y_pred.len() {
        return Err(MetricError::LengthMismatch {
            truth: y_true.len(),
            other: y_pred.len(),
        });
    }
    check_labels(y_true)?;
    check_labels(y_pred)?;
    let mut c = ConfusionCounts::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => c.tp += 1,
            (0, 1) => c.fp += 1,
            (0, 0) => c.tn += 1,
            _ => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// Rates with zero denominators reported as 0.
pub fn metrics(c: &ConfusionCounts) -> Result<Metrics, MetricError> {
    let total = c.total();
    if total == 0 {
        return Err(MetricError::EmptyEval);
    }
    let ratio = |num: u64, den: u64| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    Ok(Metrics {
        accuracy: (c.tp + c.tn) as f64 / total as f64,
        tpr: ratio(c.tp, c.tp + c.fn_),
        fpr: ratio(c.fp, c.fp + c.tn),
    })
}

/// Indices of `scores` in ascending order, grouped into runs of equal score.
fn tie_groups(scores: &[f64]) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in idx {
        match groups.last_mut() {
            Some(g) if scores[g[0]] == scores[i] => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

fn check_scored(scores: &[f64], y_true: &[u8]) -> Result<(u64, u64), MetricError> {
    if scores.len() != y_true.len() {
        return Err(MetricError::LengthMismatch {
            truth: y_true.len(),
            other: scores.len(),
        });
    }
    check_labels(y_true)?;
    let pos = y_true.iter().filter(|&&t| t == 1).count() as u64;
    let neg = y_true.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(MetricError::SingleClass);
    }
    Ok((pos, neg))
}

/// Mann-Whitney rank statistic: the probability that a random positive
/// outscores a random negative, ties counted half. Computed in integers
/// (doubled mid-ranks) with a single final division.
pub fn roc_auc(scores: &[f64], y_true: &[u8]) -> Result<f64, MetricError> {
    let (pos, neg) = check_scored(scores, y_true)?;
    let mut doubled_rank_sum: u128 = 0;
    let mut start: u128 = 1;
    for g in tie_groups(scores) {
        let end = start + g.len() as u128 - 1;
        let positives = g.iter().filter(|&&i| y_true[i] == 1).count() as u128;
        doubled_rank_sum += positives * (start + end);
        start = end + 1;
    }
    let p = pos as u128;
    let numerator = doubled_rank_sum - p * (p + 1);
    Ok(numerator as f64 / (2 * p * neg as u128) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// Rows with score >= threshold are predicted positive.
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// Full-threshold ROC curve from (0, 0) to (1, 1), one point per distinct score.
pub fn roc_points(scores: &[f64], y_true: &[u8]) -> Result<Vec<RocPoint>, MetricError> {
    let (pos, neg) = check_scored(scores, y_true)?;
    let mut out = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0u64, 0u64);
    for g in tie_groups(scores).into_iter().rev() {
        for &i in &g {
            if y_true[i] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        out.push(RocPoint {
            threshold: scores[g[0]],
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }
    Ok(out)
}

/// Trapezoidal area under a curve returned by [`roc_points`].
pub fn trapezoid_area(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum()
}
