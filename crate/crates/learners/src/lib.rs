//! Binary classifiers behind one train/score interface.
//!
//! Every model maps a row of numeric features to a score in [0, 1], read as
//! the estimated probability of class 1; hard labels are `score >= threshold`.

mod adaboost;
mod boost;
mod forest;
mod knn;
mod linalg;
mod linear;
mod logistic;
mod matrix;
mod mlp;
mod nb;
mod params;
mod tree;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use adaboost::AdaBoost;
pub use boost::{Boosted, RegNode, RegTree};
pub use forest::Forest;
pub use knn::Knn;
pub use linear::Linear;
pub use logistic::Logistic;
pub use matrix::Matrix;
pub use mlp::Mlp;
pub use nb::GaussianNb;
pub use params::{Algorithm, SpecError, UnknownAlgorithm};
pub use tree::{Criterion, Node, Tree};

/// Version of the saved-model JSON layout.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Algorithm, fully resolved hyperparameters and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct ModelSpec {
    pub algorithm: Algorithm,
    hyperparameters: BTreeMap<String, Value>,
    pub seed: u64,
}

#[derive(Deserialize)]
struct RawSpec {
    algorithm: Algorithm,
    #[serde(default)]
    hyperparameters: BTreeMap<String, Value>,
    seed: u64,
}

impl TryFrom<RawSpec> for ModelSpec {
    type Error = SpecError;

    fn try_from(raw: RawSpec) -> Result<Self, SpecError> {
        ModelSpec::new(raw.algorithm, raw.hyperparameters, raw.seed)
    }
}

impl ModelSpec {
    /// Unset hyperparameters take their defaults; unknown keys are rejected.
    pub fn new(algorithm: Algorithm, overrides: BTreeMap<String, Value>, seed: u64) -> Result<ModelSpec, SpecError> {
        Ok(ModelSpec {
            algorithm,
            hyperparameters: params::resolve(algorithm, &overrides)?,
            seed,
        })
    }

    pub fn with_defaults(algorithm: Algorithm, seed: u64) -> ModelSpec {
        ModelSpec::new(algorithm, BTreeMap::new(), seed).expect("defaults are valid")
    }

    /// Returns a copy with one hyperparameter changed.
    pub fn set(&self, key: &str, value: impl Into<Value>) -> Result<ModelSpec, SpecError> {
        let mut h = self.hyperparameters.clone();
        h.insert(key.to_string(), value.into());
        ModelSpec::new(self.algorithm, h, self.seed)
    }

    pub fn hyperparameters(&self) -> &BTreeMap<String, Value> {
        &self.hyperparameters
    }

    fn count(&self, key: &str) -> usize {
        self.hyperparameters[key].as_u64().expect("validated count") as usize
    }

    fn opt_count(&self, key: &str) -> Option<usize> {
        self.hyperparameters[key].as_u64().map(|v| v as usize)
    }

    fn num(&self, key: &str) -> f64 {
        self.hyperparameters[key].as_f64().expect("validated number")
    }

    fn text(&self, key: &str) -> &str {
        self.hyperparameters[key].as_str().expect("validated choice")
    }

    fn flag(&self, key: &str) -> bool {
        self.hyperparameters[key].as_bool().expect("validated flag")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("training matrix has no rows")]
    EmptyInput,
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteInput { row: usize, col: usize },
    #[error("{rows} rows but {labels} labels")]
    ShapeMismatch { rows: usize, labels: usize },
    #[error("label {value} at row {row} is not 0 or 1")]
    BadLabel { row: usize, value: u8 },
    #[error("{0} needs both classes in the training labels")]
    SingleClass(Algorithm),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("columns {found:?} do not match the model's features {expected:?}")]
    ColumnMismatch { expected: Vec<String>, found: Vec<String> },
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteInput { row: usize, col: usize },
}

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("model JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported model format version {0}")]
    Version(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fitted {
    Forest(Forest),
    Boosted(Boosted),
    Tree(Tree),
    AdaBoost(AdaBoost),
    Knn(Knn),
    Mlp(Mlp),
    GaussianNb(GaussianNb),
    Logistic(Logistic),
    Linear(Linear),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub spec: ModelSpec,
    pub feature_names: Vec<String>,
    pub fitted: Fitted,
}

fn validate(x: &Matrix, y: &[u8]) -> Result<(), TrainError> {
    if x.rows() == 0 {
        return Err(TrainError::EmptyInput);
    }
    if x.rows() != y.len() {
        return Err(TrainError::ShapeMismatch {
            rows: x.rows(),
            labels: y.len(),
        });
    }
    if let Some((row, col)) = x.first_non_finite() {
        return Err(TrainError::NonFiniteInput { row, col });
    }
    if let Some(row) = y.iter().position(|&v| v > 1) {
        return Err(TrainError::BadLabel { row, value: y[row] });
    }
    Ok(())
}

fn tree_params(spec: &ModelSpec, criterion: Criterion, max_features: Option<usize>) -> tree::GrowParams {
    tree::GrowParams {
        criterion,
        max_depth: spec.opt_count("max_depth"),
        min_samples_split: spec.count("min_samples_split"),
        max_features,
    }
}

/// Fits `spec` to `x` and labels `y` (0 or 1 per row).
pub fn train(spec: &ModelSpec, x: &Matrix, y: &[u8]) -> Result<TrainedModel, TrainError> {
    validate(x, y)?;
    let both = y.contains(&0) && y.contains(&1);
    if !both && spec.algorithm.needs_both_classes() {
        return Err(TrainError::SingleClass(spec.algorithm));
    }
    let all_rows = || (0..x.rows()).collect::<Vec<_>>();
    let unit = vec![1.0; x.rows()];
    // Trees without feature subsampling never draw from the generator.
    let mut idle_rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(spec.seed);
    let fitted = match spec.algorithm {
        Algorithm::Rf => {
            let d = x.cols();
            let max_features = match spec.text("max_features") {
                "sqrt" => (d as f64).sqrt() as usize,
                "log2" => (d as f64).log2() as usize,
                _ => d,
            }
            .max(1);
            let p = forest::ForestParams {
                n_estimators: spec.count("n_estimators"),
                bootstrap: spec.flag("bootstrap"),
                grow: tree_params(spec, Criterion::parse(spec.text("criterion")), Some(max_features)),
            };
            Fitted::Forest(Forest::fit(x, y, &p, spec.seed))
        }
        Algorithm::Cart | Algorithm::C45 => {
            let p = tree_params(spec, Criterion::parse(spec.text("criterion")), None);
            Fitted::Tree(Tree::grow(x, y, &unit, all_rows(), &p, &mut idle_rng))
        }
        Algorithm::Xgb => Fitted::Boosted(Boosted::fit(
            x,
            y,
            &boost::BoostParams {
                n_estimators: spec.count("n_estimators"),
                max_depth: spec.count("max_depth"),
                learning_rate: spec.num("learning_rate"),
                reg_lambda: spec.num("reg_lambda"),
                min_child_weight: spec.num("min_child_weight"),
                gamma: spec.num("gamma"),
            },
        )),
        Algorithm::Adaboost => Fitted::AdaBoost(AdaBoost::fit(
            x,
            y,
            spec.count("n_estimators"),
            spec.num("learning_rate"),
        )),
        Algorithm::Knn => Fitted::Knn(Knn {
            k: spec.count("n_neighbors"),
            train: x.clone(),
            labels: y.to_vec(),
        }),
        Algorithm::Mlp => Fitted::Mlp(Mlp::fit(
            x,
            y,
            &mlp::MlpParams {
                hidden_units: spec.count("hidden_units"),
                learning_rate: spec.num("learning_rate"),
                batch_size: spec.count("batch_size"),
                max_epochs: spec.count("max_epochs"),
                alpha: spec.num("alpha"),
                tol: spec.num("tol"),
                n_iter_no_change: spec.count("n_iter_no_change"),
            },
            spec.seed,
        )),
        Algorithm::GaussianNb => Fitted::GaussianNb(GaussianNb::fit(x, y, spec.num("var_smoothing"))),
        Algorithm::Logistic => Fitted::Logistic(Logistic::fit(
            x,
            y,
            spec.num("c"),
            spec.num("tol"),
            spec.count("max_iter"),
        )),
        Algorithm::Linear => Fitted::Linear(Linear::fit(x, y, spec.num("ridge_jitter"))),
    };
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        spec: spec.clone(),
        feature_names: x.columns.clone(),
        fitted,
    })
}

impl TrainedModel {
    fn score_row(&self, row: &[f64]) -> f64 {
        match &self.fitted {
            Fitted::Forest(m) => m.score_row(row),
            Fitted::Boosted(m) => m.score_row(row),
            Fitted::Tree(m) => m.leaf_value(row),
            Fitted::AdaBoost(m) => m.score_row(row),
            Fitted::Knn(m) => m.score_row(row),
            Fitted::Mlp(m) => m.score_row(row),
            Fitted::GaussianNb(m) => m.score_row(row),
            Fitted::Logistic(m) => m.score_row(row),
            Fitted::Linear(m) => m.score_row(row),
        }
    }

    /// Per-row scores in [0, 1]. Rows are scored in parallel; each score
    /// depends only on its own row.
    pub fn score(&self, x: &Matrix) -> Result<Vec<f64>, ScoreError> {
        if x.columns != self.feature_names {
            return Err(ScoreError::ColumnMismatch {
                expected: self.feature_names.clone(),
                found: x.columns.clone(),
            });
        }
        if let Some((row, col)) = x.first_non_finite() {
            return Err(ScoreError::NonFiniteInput { row, col });
        }
        Ok((0..x.rows())
            .into_par_iter()
            .map(|i| self.score_row(x.row(i)))
            .collect())
    }

    pub fn predict(&self, x: &Matrix, threshold: f64) -> Result<Vec<u8>, ScoreError> {
        Ok(threshold_scores(&self.score(x)?, threshold))
    }

    pub fn to_json(&self) -> Result<String, ModelIoError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<TrainedModel, ModelIoError> {
        let v: Value = serde_json::from_str(text)?;
        let version = v.get("format_version").and_then(Value::as_u64).unwrap_or(0) as u32;
        if version != MODEL_FORMAT_VERSION {
            return Err(ModelIoError::Version(version));
        }
        Ok(serde_json::from_value(v)?)
    }
}

/// Hard labels: 1 where `score >= threshold`.
pub fn threshold_scores(scores: &[f64], threshold: f64) -> Vec<u8> {
    scores.iter().map(|&s| u8::from(s >= threshold)).collect()
}
