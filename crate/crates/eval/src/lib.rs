//! Metrics, cross-validation, cross-dataset validation and the
//! algorithm × feature-set grid.

mod cross;
mod cv;
mod grid;
pub mod metrics;
pub mod render;
pub mod synthetic;

use encdetect_core::dataset::FoldError;
use encdetect_core::features::FeatureSetName;
use encdetect_learners::{ScoreError, SpecError, TrainError};
use thiserror::Error;

pub use cross::{run_cross_dataset, sources, CrossCell, CrossDatasetReport, CrossDirection};
pub use cv::{
    fold_model_seed, run_cv, run_cv_detailed, set_column_indices, summarize, EvalReport, FoldResult, FoldScores,
    MetricSummary, THRESHOLD,
};
pub use grid::{experiment_grid, experiment_grid_detailed, fos_vs_fots, join_on_session, GridConfig, Schedule};
pub use metrics::{confusion, metrics, roc_auc, ConfusionCounts, MetricError, Metrics};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Fold(#[from] FoldError),
    #[error("feature set {set} needs {feature:?}, which the data lacks")]
    MissingFeature { set: FeatureSetName, feature: String },
    #[error("fold plan covers {plan_rows} rows but the data has {data_rows}")]
    PlanMismatch { plan_rows: usize, data_rows: usize },
    #[error("training split is empty")]
    EmptyTrain,
    #[error("session {0} appears in both the training and the test split")]
    SharedSession(String),
    #[error("cross-dataset validation needs at least two sources, found {0:?}")]
    SingleSource(Vec<String>),
    #[error("source {0} does not contain both classes")]
    SourceSingleClass(String),
    #[error("cannot join tables: {0}")]
    JoinConflict(String),
}
