//! L2-penalised logistic regression fitted by damped Newton iterations.
//!
//! Objective: c · Σ logloss + ½‖w‖², intercept unpenalised.

use serde::{Deserialize, Serialize};

use crate::boost::sigmoid;
use crate::linalg::cholesky_solve;
use crate::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Logistic {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

struct Problem<'a> {
    x: &'a Matrix,
    y: &'a [u8],
    c: f64,
}

impl Problem<'_> {
    /// θ = [w..., b]
    fn margin(&self, theta: &[f64], i: usize) -> f64 {
        let d = self.x.cols();
        self.x.row(i).iter().zip(&theta[..d]).map(|(a, b)| a * b).sum::<f64>() + theta[d]
    }

    fn objective(&self, theta: &[f64]) -> f64 {
        let d = self.x.cols();
        let data: f64 = (0..self.x.rows())
            .map(|i| {
                let z = self.margin(theta, i);
                softplus(z) - f64::from(self.y[i]) * z
            })
            .sum();
        self.c * data + 0.5 * theta[..d].iter().map(|w| w * w).sum::<f64>()
    }

    fn gradient_hessian(&self, theta: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d = self.x.cols();
        let m = d + 1;
        let mut grad = vec![0.0; m];
        let mut hess = vec![0.0; m * m];
        for i in 0..self.x.rows() {
            let p = sigmoid(self.margin(theta, i));
            let r = self.c * (p - f64::from(self.y[i]));
            let s = self.c * p * (1.0 - p);
            let row = self.x.row(i);
            let xi = |j: usize| if j < d { row[j] } else { 1.0 };
            for a in 0..m {
                grad[a] += r * xi(a);
                let sa = s * xi(a);
                for b in 0..=a {
                    hess[a * m + b] += sa * xi(b);
                }
            }
        }
        for a in 0..m {
            for b in 0..a {
                hess[b * m + a] = hess[a * m + b];
            }
        }
        for j in 0..d {
            grad[j] += theta[j];
            hess[j * m + j] += 1.0;
        }
        // Keeps the intercept pivot positive when every row is saturated.
        hess[d * m + d] += 1e-10;
        (grad, hess)
    }
}

impl Logistic {
    pub(crate) fn fit(x: &Matrix, y: &[u8], c: f64, tol: f64, max_iter: usize) -> Logistic {
        let prob = Problem { x, y, c };
        let m = x.cols() + 1;
        let mut theta = vec![0.0; m];
        let mut f = prob.objective(&theta);
        let mut iterations = 0;
        let mut converged = false;
        while iterations < max_iter {
            let (grad, hess) = prob.gradient_hessian(&theta);
            if grad.iter().map(|g| g * g).sum::<f64>().sqrt() <= tol {
                converged = true;
                break;
            }
            iterations += 1;
            let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
            let step = cholesky_solve(&hess, &neg, m).unwrap_or(neg);
            let slope: f64 = grad.iter().zip(&step).map(|(g, s)| g * s).sum();
            let mut t = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let cand: Vec<f64> = theta.iter().zip(&step).map(|(a, s)| a + t * s).collect();
                let fc = prob.objective(&cand);
                if fc <= f + 1e-4 * t * slope {
                    theta = cand;
                    f = fc;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
        }
        let d = x.cols();
        Logistic {
            weights: theta[..d].to_vec(),
            intercept: theta[d],
            iterations,
            converged,
        }
    }

    pub fn score_row(&self, row: &[f64]) -> f64 {
        sigmoid(row.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>() + self.intercept)
    }
}
