//! Ordinary least squares on 0/1 targets.

use serde::{Deserialize, Serialize};

use crate::linalg::cholesky_solve;
use crate::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Whether the Gram matrix needed the ridge term to factorise.
    pub jittered: bool,
}

impl Linear {
    pub(crate) fn fit(x: &Matrix, y: &[u8], ridge_jitter: f64) -> Linear {
        let d = x.cols();
        let m = d + 1;
        let mut gram = vec![0.0; m * m];
        let mut rhs = vec![0.0; m];
        for (row, &t) in x.iter_rows().zip(y) {
            let xi = |j: usize| if j < d { row[j] } else { 1.0 };
            for a in 0..m {
                rhs[a] += xi(a) * f64::from(t);
                for b in 0..=a {
                    gram[a * m + b] += xi(a) * xi(b);
                }
            }
        }
        for a in 0..m {
            for b in 0..a {
                gram[b * m + a] = gram[a * m + b];
            }
        }
        let (theta, jittered) = match cholesky_solve(&gram, &rhs, m) {
            Some(t) => (t, false),
            None => {
                let mut g = gram.clone();
                for a in 0..m {
                    g[a * m + a] += ridge_jitter;
                }
                let t = cholesky_solve(&g, &rhs, m).unwrap_or_else(|| vec![0.0; m]);
                (t, true)
            }
        };
        Linear {
            weights: theta[..d].to_vec(),
            intercept: theta[d],
            jittered,
        }
    }

    /// Least-squares prediction clamped to [0, 1].
    pub fn score_row(&self, row: &[f64]) -> f64 {
        let v = row.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>() + self.intercept;
        v.clamp(0.0, 1.0)
    }
}
