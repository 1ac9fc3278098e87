//! Gaussian naive Bayes.

use serde::{Deserialize, Serialize};

use crate::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub log_prior: [f64; 2],
    pub mean: [Vec<f64>; 2],
    /// Per-class variances after smoothing.
    pub var: [Vec<f64>; 2],
}

fn column_stats<'a>(rows: impl Iterator<Item = &'a [f64]>, d: usize) -> (Vec<f64>, Vec<f64>, usize) {
    let rows: Vec<&[f64]> = rows.collect();
    let n = rows.len();
    let mut mean = vec![0.0; d];
    for r in &rows {
        for (m, v) in mean.iter_mut().zip(*r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; d];
    for r in &rows {
        for j in 0..d {
            var[j] += (r[j] - mean[j]).powi(2);
        }
    }
    var.iter_mut().for_each(|v| *v /= n as f64);
    (mean, var, n)
}

impl GaussianNb {
    /// Variances are floored by `var_smoothing` times the largest feature
    /// variance over all rows.
    pub(crate) fn fit(x: &Matrix, y: &[u8], var_smoothing: f64) -> GaussianNb {
        let d = x.cols();
        let (_, all_var, n) = column_stats(x.iter_rows(), d);
        let eps = var_smoothing * all_var.iter().copied().fold(0.0, f64::max);
        let per_class = |c: u8| column_stats(x.iter_rows().zip(y).filter(|(_, &t)| t == c).map(|(r, _)| r), d);
        let (m0, mut v0, n0) = per_class(0);
        let (m1, mut v1, n1) = per_class(1);
        v0.iter_mut().chain(v1.iter_mut()).for_each(|v| *v += eps);
        GaussianNb {
            log_prior: [(n0 as f64 / n as f64).ln(), (n1 as f64 / n as f64).ln()],
            mean: [m0, m1],
            var: [v0, v1],
        }
    }

    fn joint_log_likelihood(&self, c: usize, row: &[f64]) -> f64 {
        let mut s = self.log_prior[c];
        for ((x, m), v) in row.iter().zip(&self.mean[c]).zip(&self.var[c]) {
            s -= 0.5 * (2.0 * std::f64::consts::PI * v).ln() + 0.5 * (x - m) * (x - m) / v;
        }
        s
    }

    /// Posterior probability of class 1.
    pub fn score_row(&self, row: &[f64]) -> f64 {
        let j0 = self.joint_log_likelihood(0, row);
        let j1 = self.joint_log_likelihood(1, row);
        // 1 / (1 + e^(j0 - j1)), stable in both tails
        crate::boost::sigmoid(j1 - j0)
    }
}
