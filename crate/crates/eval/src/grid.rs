//! Algorithm × feature-set grid and the protocol-agnostic vs TLS comparison.

use std::collections::{BTreeMap, HashMap};

use encdetect_core::dataset::{derive_seed, stratified_kfold, Dataset, FoldPlan, LabeledRow};
use encdetect_core::features::FeatureSetName;
use encdetect_learners::{Algorithm, ModelSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cv::{run_cv_detailed, EvalReport, FoldScores};
use crate::EvalError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// Cells, folds and model internals on the global thread pool.
    #[default]
    Parallel,
    /// Everything on one thread.
    Sequential,
}

impl Schedule {
    /// Runs `f` under this schedule.
    pub fn run<T: Send>(self, f: impl FnOnce() -> T + Send) -> T {
        match self {
            Schedule::Parallel => f(),
            Schedule::Sequential => rayon::ThreadPoolBuilder::new()
                .num_threads(1)
                .build()
                .expect("single-thread pool")
                .install(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub algorithms: Vec<Algorithm>,
    pub feature_sets: Vec<FeatureSetName>,
    pub k: usize,
    pub seed: u64,
    /// Hyperparameter overrides per algorithm; unset keys keep their defaults.
    #[serde(default)]
    pub hyperparameters: BTreeMap<Algorithm, BTreeMap<String, Value>>,
    #[serde(default)]
    pub schedule: Schedule,
}

impl GridConfig {
    /// All ten algorithms over the five protocol-agnostic sets, k = 5.
    pub fn full(seed: u64) -> GridConfig {
        GridConfig {
            algorithms: Algorithm::ALL.to_vec(),
            feature_sets: FeatureSetName::NUMERIC.to_vec(),
            k: 5,
            seed,
            hyperparameters: BTreeMap::new(),
            schedule: Schedule::Parallel,
        }
    }

    /// Spec for one algorithm; its seed derives from the grid seed and the
    /// algorithm name so every feature set sees the same model seed.
    pub fn spec(&self, algorithm: Algorithm) -> Result<ModelSpec, EvalError> {
        let overrides = self.hyperparameters.get(&algorithm).cloned().unwrap_or_default();
        Ok(ModelSpec::new(
            algorithm,
            overrides,
            derive_seed(self.seed, &["model", algorithm.as_str()]),
        )?)
    }

    pub fn fold_plan(&self, data: &Dataset) -> Result<FoldPlan, EvalError> {
        Ok(stratified_kfold(
            &data.labels(),
            self.k,
            derive_seed(self.seed, &["folds"]),
        )?)
    }
}

/// One report per (feature set, algorithm), feature-set major, in the order
/// the config lists them. All cells share one fold plan.
pub fn experiment_grid(data: &Dataset, config: &GridConfig) -> Result<Vec<EvalReport>, EvalError> {
    Ok(experiment_grid_detailed(data, config)?
        .into_iter()
        .map(|(r, _)| r)
        .collect())
}

/// As [`experiment_grid`], keeping each cell's per-fold test scores.
pub fn experiment_grid_detailed(
    data: &Dataset,
    config: &GridConfig,
) -> Result<Vec<(EvalReport, Vec<FoldScores>)>, EvalError> {
    let plan = config.fold_plan(data)?;
    let mut cells = Vec::new();
    for &set in &config.feature_sets {
        for &a in &config.algorithms {
            cells.push((set, config.spec(a)?));
        }
    }
    let results: Vec<Result<(EvalReport, Vec<FoldScores>), EvalError>> = config.schedule.run(|| {
        cells
            .par_iter()
            .map(|(set, spec)| run_cv_detailed(spec, data, *set, &plan))
            .collect()
    });
    results.into_iter().collect()
}

/// Inner join of a protocol-agnostic table and a TLS feature table on
/// session id. Rows keep the order of `features`; columns are the
/// features' columns followed by the TLS columns.
pub fn join_on_session(features: &Dataset, tls: &Dataset) -> Result<Dataset, EvalError> {
    let by_id: HashMap<&str, &LabeledRow> = tls.rows.iter().map(|r| (r.session_id.as_str(), r)).collect();
    let mut columns = features.columns.clone();
    for c in &tls.columns {
        if columns.contains(c) {
            return Err(EvalError::JoinConflict(format!("column {c} in both tables")));
        }
        columns.push(c.clone());
    }
    let mut out = Dataset::new(columns, features.catalog_version.clone());
    for r in &features.rows {
        let Some(t) = by_id.get(r.session_id.as_str()) else {
            continue;
        };
        if t.label != r.label {
            return Err(EvalError::JoinConflict(format!(
                "labels differ for session {}",
                r.session_id
            )));
        }
        let mut row = r.clone();
        row.values.extend_from_slice(&t.values);
        out.rows.push(row);
    }
    Ok(out)
}

/// Protocol-agnostic FOS against TLS-derived FOTS on the same sessions and
/// the same folds; reports are FOS-first, then FOTS, each in algorithm order.
pub fn fos_vs_fots(
    features: &Dataset,
    tls: &Dataset,
    config: &GridConfig,
) -> Result<Vec<(EvalReport, Vec<FoldScores>)>, EvalError> {
    let joined = join_on_session(features, tls)?;
    let mut cfg = config.clone();
    cfg.feature_sets = vec![FeatureSetName::Fos, FeatureSetName::Fots];
    experiment_grid_detailed(&joined, &cfg)
}
