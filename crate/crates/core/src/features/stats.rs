//! Summary statistics over a series of values.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("cannot aggregate an empty series")]
pub struct EmptyInput;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Aggregate {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
    /// Population standard deviation (divisor N).
    pub std: f64,
}

impl Aggregate {
    pub const ZERO: Aggregate = Aggregate {
        min: 0.0,
        max: 0.0,
        mean: 0.0,
        median: 0.0,
        std: 0.0,
    };

    pub fn get(&self, kind: AggregateKind) -> f64 {
        match kind {
            AggregateKind::Min => self.min,
            AggregateKind::Max => self.max,
            AggregateKind::Mean => self.mean,
            AggregateKind::Median => self.median,
            AggregateKind::Std => self.std,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggregateKind {
    Min,
    Max,
    Mean,
    Median,
    Std,
}

impl AggregateKind {
    pub const ALL: [AggregateKind; 5] = [
        AggregateKind::Min,
        AggregateKind::Max,
        AggregateKind::Mean,
        AggregateKind::Median,
        AggregateKind::Std,
    ];

    pub fn prefix(self) -> &'static str {
        match self {
            AggregateKind::Min => "min",
            AggregateKind::Max => "max",
            AggregateKind::Mean => "mean",
            AggregateKind::Median => "median",
            AggregateKind::Std => "std",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            AggregateKind::Min => "minimum",
            AggregateKind::Max => "maximum",
            AggregateKind::Mean => "mean",
            AggregateKind::Median => "median",
            AggregateKind::Std => "population standard deviation",
        }
    }
}

pub fn aggregate(xs: &[f64]) -> Result<Aggregate, EmptyInput> {
    if xs.is_empty() {
        return Err(EmptyInput);
    }
    let n = xs.len() as f64;
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 0 {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    } else {
        sorted[mid]
    };
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    Ok(Aggregate {
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        // Rounding can push the mean of a constant series a hair outside it.
        mean: mean.clamp(sorted[0], sorted[sorted.len() - 1]),
        median,
        std: var.sqrt(),
    })
}

/// Like [`aggregate`] but an empty series aggregates to all zeros.
pub fn aggregate_or_zero(xs: &[f64]) -> Aggregate {
    aggregate(xs).unwrap_or(Aggregate::ZERO)
}
