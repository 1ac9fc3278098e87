//! Bagged trees with per-split feature subsampling.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::tree::{GrowParams, Tree};
use crate::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

pub(crate) struct ForestParams {
    pub n_estimators: usize,
    pub bootstrap: bool,
    pub grow: GrowParams,
}

impl Forest {
    /// Trees are grown in parallel; each draws from its own generator seeded
    /// in sequence from `seed`, so the result does not depend on scheduling.
    pub(crate) fn fit(x: &Matrix, y: &[u8], params: &ForestParams, seed: u64) -> Forest {
        let mut master = ChaCha8Rng::seed_from_u64(seed);
        let seeds: Vec<u64> = (0..params.n_estimators).map(|_| master.next_u64()).collect();
        let n = x.rows();
        let trees = seeds
            .par_iter()
            .map(|&s| {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                let mut counts = vec![0.0; n];
                if params.bootstrap {
                    for _ in 0..n {
                        counts[rng.random_range(0..n)] += 1.0;
                    }
                } else {
                    counts.fill(1.0);
                }
                let samples: Vec<usize> = (0..n).filter(|&i| counts[i] > 0.0).collect();
                Tree::grow(x, y, &counts, samples, &params.grow, &mut rng)
            })
            .collect();
        Forest { trees }
    }

    /// Fraction of trees voting class 1; a tree votes 1 when its leaf holds a
    /// strict class-1 majority.
    pub fn score_row(&self, row: &[f64]) -> f64 {
        let votes = self.trees.iter().filter(|t| t.leaf_value(row) > 0.5).count();
        votes as f64 / self.trees.len() as f64
    }
}
