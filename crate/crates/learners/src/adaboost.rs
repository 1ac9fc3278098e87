//! SAMME boosting of depth-1 stumps.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::tree::{Criterion, GrowParams, Tree};
use crate::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoost {
    pub stumps: Vec<Tree>,
    pub alphas: Vec<f64>,
}

fn vote(t: &Tree, row: &[f64]) -> u8 {
    u8::from(t.leaf_value(row) > 0.5)
}

impl AdaBoost {
    pub(crate) fn fit(x: &Matrix, y: &[u8], n_estimators: usize, learning_rate: f64) -> AdaBoost {
        let n = x.rows();
        let params = GrowParams {
            criterion: Criterion::Gini,
            max_depth: Some(1),
            min_samples_split: 2,
            max_features: None,
        };
        // Stumps examine every feature, so the generator is never drawn from.
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut w = vec![1.0 / n as f64; n];
        let mut model = AdaBoost {
            stumps: Vec::new(),
            alphas: Vec::new(),
        };
        for _ in 0..n_estimators {
            let stump = Tree::grow(x, y, &w, (0..n).collect(), &params, &mut rng);
            let miss: Vec<bool> = (0..n).map(|i| vote(&stump, x.row(i)) != y[i]).collect();
            let total: f64 = w.iter().sum();
            let err = miss.iter().zip(&w).filter(|(m, _)| **m).map(|(_, wi)| wi).sum::<f64>() / total;
            if err <= 0.0 {
                model.stumps.push(stump);
                model.alphas.push(1.0);
                break;
            }
            if err >= 0.5 {
                // No better than chance; keep one stump so the model can score.
                if model.stumps.is_empty() {
                    model.stumps.push(stump);
                    model.alphas.push(1.0);
                }
                break;
            }
            let alpha = learning_rate * ((1.0 - err) / err).ln();
            for (wi, m) in w.iter_mut().zip(&miss) {
                if *m {
                    *wi *= alpha.exp();
                }
            }
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|wi| *wi /= total);
            model.stumps.push(stump);
            model.alphas.push(alpha);
        }
        model
    }

    /// Alpha-weighted fraction of stumps voting class 1.
    pub fn score_row(&self, row: &[f64]) -> f64 {
        let total: f64 = self.alphas.iter().sum();
        let ones: f64 = self
            .stumps
            .iter()
            .zip(&self.alphas)
            .filter(|(s, _)| vote(s, row) == 1)
            .map(|(_, a)| a)
            .sum();
        ones / total
    }
}
