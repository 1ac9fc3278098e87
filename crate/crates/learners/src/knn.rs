//! k nearest neighbours under Euclidean distance.

use serde::{Deserialize, Serialize};

use crate::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub train: Matrix,
    pub labels: Vec<u8>,
}

impl Knn {
    /// Fraction of class-1 rows among the k nearest training rows; equal
    /// distances are ordered by lower training row index.
    pub fn score_row(&self, row: &[f64]) -> f64 {
        let mut dist: Vec<(f64, usize)> = self
            .train
            .iter_rows()
            .enumerate()
            .map(|(i, t)| (t.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
            .collect();
        let k = self.k.min(dist.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, cmp);
        }
        let ones = dist[..k].iter().filter(|(_, i)| self.labels[*i] == 1).count();
        ones as f64 / k as f64
    }
}
