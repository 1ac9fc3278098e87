//! Stratified cross-validation of one model spec on one feature set.

use std::collections::HashSet;

use encdetect_core::dataset::{derive_seed, fit_normalizer, Dataset, FoldPlan, Normalizer, NormalizerRange};
use encdetect_core::features::{parse_packet_column, FeatureSetName};
use encdetect_learners::{threshold_scores, train, Matrix, ModelSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::metrics::{confusion, metrics, roc_auc, ConfusionCounts};
use crate::EvalError;

/// Decision threshold used for every hard-label metric.
pub const THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub accuracy: f64,
    pub roc_auc: f64,
    pub fpr: f64,
    pub tpr: f64,
}

impl MetricSummary {
    fn values(&self) -> [f64; 4] {
        [self.accuracy, self.roc_auc, self.fpr, self.tpr]
    }

    fn from_values(v: [f64; 4]) -> Self {
        MetricSummary {
            accuracy: v[0],
            roc_auc: v[1],
            fpr: v[2],
            tpr: v[3],
        }
    }
}

/// Mean and population standard deviation of each metric.
pub fn summarize(cells: &[MetricSummary]) -> (MetricSummary, MetricSummary) {
    let n = cells.len() as f64;
    let mut mean = [0.0; 4];
    for c in cells {
        for (m, v) in mean.iter_mut().zip(c.values()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = [0.0; 4];
    for c in cells {
        for ((s, v), m) in var.iter_mut().zip(c.values()).zip(mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std = var.map(|s| (s / n).sqrt());
    (MetricSummary::from_values(mean), MetricSummary::from_values(std))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub model_seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub confusion: ConfusionCounts,
    pub metrics: MetricSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub spec: ModelSpec,
    pub feature_set: FeatureSetName,
    pub columns: Vec<String>,
    pub k: usize,
    pub fold_seed: u64,
    pub folds: Vec<FoldResult>,
    pub mean: MetricSummary,
    pub std: MetricSummary,
    /// Digest or path of the manifest describing the evaluated data.
    pub dataset: Option<String>,
}

/// Test-split scores of one fold, for ROC curve output.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldScores {
    pub fold: usize,
    pub scores: Vec<f64>,
    pub truth: Vec<u8>,
}

/// Positions in `columns` that make up `set`, in set order. Packet
/// features bring every window column present.
pub fn set_column_indices(set: FeatureSetName, columns: &[String]) -> Result<Vec<usize>, EvalError> {
    let Some(members) = set.members() else {
        return Ok((0..columns.len()).collect());
    };
    let mut out = Vec::new();
    for &name in members {
        let before = out.len();
        if let Some(j) = columns.iter().position(|c| c == name) {
            out.push(j);
        } else {
            out.extend(
                (0..columns.len()).filter(|&j| parse_packet_column(&columns[j]).is_some_and(|(n, _)| n == name)),
            );
        }
        if out.len() == before {
            return Err(EvalError::MissingFeature {
                set,
                feature: name.to_string(),
            });
        }
    }
    Ok(out)
}

fn raw_matrix(data: &Dataset, rows: &[usize], cols: &[usize]) -> Matrix {
    let names = cols.iter().map(|&j| data.columns[j].clone()).collect();
    let mut values = Vec::with_capacity(rows.len() * cols.len());
    for &i in rows {
        let r = &data.rows[i].values;
        values.extend(cols.iter().map(|&j| r[j]));
    }
    Matrix::new(names, rows.len(), values)
}

fn normalized(m: &Matrix, norm: &Normalizer) -> Matrix {
    let mut values = Vec::with_capacity(m.rows() * m.cols());
    for r in m.iter_rows() {
        values.extend(r.iter().enumerate().map(|(j, &x)| norm.transform_value(j, x)));
    }
    Matrix::new(m.columns.clone(), m.rows(), values)
}

/// Fits a normalizer on the training rows only, then trains on them and
/// scores the test rows.
pub(crate) fn fit_and_score(
    spec: &ModelSpec,
    data: &Dataset,
    cols: &[usize],
    train_rows: &[usize],
    test_rows: &[usize],
) -> Result<Vec<f64>, EvalError> {
    let train_raw = raw_matrix(data, train_rows, cols);
    let norm = fit_normalizer(&train_raw.columns, train_raw.iter_rows(), NormalizerRange::ZeroOne)
        .map_err(|_| EvalError::EmptyTrain)?;
    let y: Vec<u8> = train_rows.iter().map(|&i| data.rows[i].label.as_u8()).collect();
    let model = train(spec, &normalized(&train_raw, &norm), &y)?;
    Ok(model.score(&normalized(&raw_matrix(data, test_rows, cols), &norm))?)
}

pub(crate) fn score_metrics(scores: &[f64], truth: &[u8]) -> Result<(ConfusionCounts, MetricSummary), EvalError> {
    let c = confusion(truth, &threshold_scores(scores, THRESHOLD))?;
    let m = metrics(&c)?;
    Ok((
        c,
        MetricSummary {
            accuracy: m.accuracy,
            roc_auc: roc_auc(scores, truth)?,
            fpr: m.fpr,
            tpr: m.tpr,
        },
    ))
}

/// Seed of the model trained for `fold`, derived from the model seed.
pub fn fold_model_seed(spec_seed: u64, fold: usize) -> u64 {
    derive_seed(spec_seed, &["fold", &fold.to_string()])
}

pub fn run_cv(spec: &ModelSpec, data: &Dataset, set: FeatureSetName, plan: &FoldPlan) -> Result<EvalReport, EvalError> {
    run_cv_detailed(spec, data, set, plan).map(|(r, _)| r)
}

/// Folds run in parallel; results are collected in fold order.
pub fn run_cv_detailed(
    spec: &ModelSpec,
    data: &Dataset,
    set: FeatureSetName,
    plan: &FoldPlan,
) -> Result<(EvalReport, Vec<FoldScores>), EvalError> {
    if plan.assignments.len() != data.len() {
        return Err(EvalError::PlanMismatch {
            plan_rows: plan.assignments.len(),
            data_rows: data.len(),
        });
    }
    let cols = set_column_indices(set, &data.columns)?;
    let per_fold: Vec<Result<(FoldResult, FoldScores), EvalError>> = (0..plan.k)
        .into_par_iter()
        .map(|fold| {
            let train_rows = plan.train_indices(fold);
            let test_rows = plan.test_indices(fold);
            check_disjoint(data, &train_rows, &test_rows)?;
            let mut fold_spec = spec.clone();
            fold_spec.seed = fold_model_seed(spec.seed, fold);
            let scores = fit_and_score(&fold_spec, data, &cols, &train_rows, &test_rows)?;
            let truth: Vec<u8> = test_rows.iter().map(|&i| data.rows[i].label.as_u8()).collect();
            let (confusion, metrics) = score_metrics(&scores, &truth)?;
            Ok((
                FoldResult {
                    fold,
                    model_seed: fold_spec.seed,
                    n_train: train_rows.len(),
                    n_test: test_rows.len(),
                    confusion,
                    metrics,
                },
                FoldScores { fold, scores, truth },
            ))
        })
        .collect();
    let mut folds = Vec::with_capacity(plan.k);
    let mut scores = Vec::with_capacity(plan.k);
    for r in per_fold {
        let (f, s) = r?;
        folds.push(f);
        scores.push(s);
    }
    let (mean, std) = summarize(&folds.iter().map(|f| f.metrics).collect::<Vec<_>>());
    Ok((
        EvalReport {
            spec: spec.clone(),
            feature_set: set,
            columns: cols.iter().map(|&j| data.columns[j].clone()).collect(),
            k: plan.k,
            fold_seed: plan.seed,
            folds,
            mean,
            std,
            dataset: None,
        },
        scores,
    ))
}

/// A session id on both sides of a split means the data holds duplicates
/// that would leak test rows into training.
fn check_disjoint(data: &Dataset, train_rows: &[usize], test_rows: &[usize]) -> Result<(), EvalError> {
    let train_ids: HashSet<&str> = train_rows.iter().map(|&i| data.rows[i].session_id.as_str()).collect();
    match test_rows
        .iter()
        .find(|&&i| train_ids.contains(data.rows[i].session_id.as_str()))
    {
        Some(&i) => Err(EvalError::SharedSession(data.rows[i].session_id.clone())),
        None => Ok(()),
    }
}
