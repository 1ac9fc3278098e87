//! Train on some sources, test on the rest.

use std::collections::BTreeSet;

use encdetect_core::dataset::{derive_seed, Dataset};
use encdetect_core::features::FeatureSetName;
use encdetect_learners::ModelSpec;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cv::{fit_and_score, score_metrics, set_column_indices, MetricSummary};
use crate::metrics::ConfusionCounts;
use crate::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossDirection {
    /// Train on every other source, test on the held-out source A.
    TrainOthersTestA,
    /// Train on A alone, test on every other source pooled.
    TrainATestOthers,
}

impl CrossDirection {
    pub const BOTH: [CrossDirection; 2] = [CrossDirection::TrainOthersTestA, CrossDirection::TrainATestOthers];

    pub fn as_str(self) -> &'static str {
        match self {
            CrossDirection::TrainOthersTestA => "train_others_test_A",
            CrossDirection::TrainATestOthers => "train_A_test_others",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCell {
    /// The source A of this cell.
    pub source: String,
    pub model_seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub confusion: ConfusionCounts,
    pub metrics: MetricSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossDatasetReport {
    pub direction: CrossDirection,
    pub spec: ModelSpec,
    pub feature_set: FeatureSetName,
    /// One cell per source, ordered by source name.
    pub cells: Vec<CrossCell>,
}

/// Distinct source names in sorted order.
pub fn sources(data: &Dataset) -> Vec<String> {
    data.rows
        .iter()
        .map(|r| r.source_dataset.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Both directions for every source. Normalizers are fitted on the training
/// side only; model seeds derive from `seed`, the direction and the source.
pub fn run_cross_dataset(
    spec: &ModelSpec,
    data: &Dataset,
    set: FeatureSetName,
    seed: u64,
) -> Result<Vec<CrossDatasetReport>, EvalError> {
    let names = sources(data);
    if names.len() < 2 {
        return Err(EvalError::SingleSource(names));
    }
    for name in &names {
        let labels: BTreeSet<_> = data
            .rows
            .iter()
            .filter(|r| &r.source_dataset == name)
            .map(|r| r.label)
            .collect();
        if labels.len() < 2 {
            return Err(EvalError::SourceSingleClass(name.clone()));
        }
    }
    let cols = set_column_indices(set, &data.columns)?;
    let jobs: Vec<(CrossDirection, &String)> = CrossDirection::BOTH
        .iter()
        .flat_map(|&d| names.iter().map(move |n| (d, n)))
        .collect();
    let cells: Vec<Result<CrossCell, EvalError>> = jobs
        .par_iter()
        .map(|&(direction, source)| {
            let (inside, outside): (Vec<usize>, Vec<usize>) =
                (0..data.len()).partition(|&i| &data.rows[i].source_dataset == source);
            let (train_rows, test_rows) = match direction {
                CrossDirection::TrainOthersTestA => (outside, inside),
                CrossDirection::TrainATestOthers => (inside, outside),
            };
            let mut cell_spec = spec.clone();
            cell_spec.seed = derive_seed(seed, &[direction.as_str(), source]);
            let scores = fit_and_score(&cell_spec, data, &cols, &train_rows, &test_rows)?;
            let truth: Vec<u8> = test_rows.iter().map(|&i| data.rows[i].label.as_u8()).collect();
            let (confusion, metrics) = score_metrics(&scores, &truth)?;
            Ok(CrossCell {
                source: source.clone(),
                model_seed: cell_spec.seed,
                n_train: train_rows.len(),
                n_test: test_rows.len(),
                confusion,
                metrics,
            })
        })
        .collect();
    let mut cells = cells.into_iter();
    let mut reports = Vec::new();
    for direction in CrossDirection::BOTH {
        let mut r = CrossDatasetReport {
            direction,
            spec: spec.clone(),
            feature_set: set,
            cells: Vec::new(),
        };
        for _ in &names {
            r.cells.push(cells.next().expect("one cell per job")?);
        }
        reports.push(r);
    }
    Ok(reports)
}
