//! Stratified k-fold assignment.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Label;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    /// Fold id of each row.
    pub assignments: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FoldError {
    #[error("k must be at least 2, got {0}")]
    BadK(usize),
    #[error("class {label} has {have} rows, fewer than k = {k}")]
    TooFewRows { label: Label, have: usize, k: usize },
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }
}

/// Shuffles each class with the seed and deals its rows round-robin across
/// folds. The dealing position carries over from one class to the next so
/// fold sizes stay within one of each other as well.
pub fn stratified_kfold(labels: &[Label], k: usize, seed: u64) -> Result<FoldPlan, FoldError> {
    if k < 2 {
        return Err(FoldError::BadK(k));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0; labels.len()];
    let mut next = 0;
    for label in [Label::Legitimate, Label::Malicious] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == label).collect();
        if idx.len() < k {
            return Err(FoldError::TooFewRows {
                label,
                have: idx.len(),
                k,
            });
        }
        idx.shuffle(&mut rng);
        for i in idx {
            assignments[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldPlan { k, seed, assignments })
}
