//! One-hidden-layer perceptron with rectified units and a logistic output,
//! trained by minibatch Adam on log-loss with an L2 penalty.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boost::sigmoid;
use crate::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    /// Input-to-hidden weights, row-major inputs × hidden.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
    pub hidden: usize,
    pub epochs_run: usize,
    pub loss_curve: Vec<f64>,
}

pub(crate) struct MlpParams {
    pub hidden_units: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub alpha: f64,
    pub tol: f64,
    pub n_iter_no_change: usize,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Adam {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [&mut f64], grads: &[f64], lr: f64) {
        self.t += 1;
        let lr_t = lr * (1.0 - BETA2.powi(self.t)).sqrt() / (1.0 - BETA1.powi(self.t));
        for (k, p) in params.iter_mut().enumerate() {
            let g = grads[k];
            self.m[k] = BETA1 * self.m[k] + (1.0 - BETA1) * g;
            self.v[k] = BETA2 * self.v[k] + (1.0 - BETA2) * g * g;
            **p -= lr_t * self.m[k] / (self.v[k].sqrt() + ADAM_EPS);
        }
    }
}

fn glorot(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize, n: usize) -> Vec<f64> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..n).map(|_| rng.random_range(-bound..bound)).collect()
}

impl Mlp {
    fn hidden_layer(&self, row: &[f64], out: &mut [f64]) {
        let h = self.hidden;
        out.copy_from_slice(&self.b1);
        for (j, &xj) in row.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            let w = &self.w1[j * h..(j + 1) * h];
            for (o, wk) in out.iter_mut().zip(w) {
                *o += xj * wk;
            }
        }
        out.iter_mut().for_each(|o| *o = o.max(0.0));
    }

    pub(crate) fn fit(x: &Matrix, y: &[u8], p: &MlpParams, seed: u64) -> Mlp {
        let (n, d, h) = (x.rows(), x.cols(), p.hidden_units);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Mlp {
            w1: glorot(&mut rng, d, h, d * h),
            b1: glorot(&mut rng, d, h, h),
            w2: glorot(&mut rng, h, 1, h),
            b2: glorot(&mut rng, h, 1, 1)[0],
            hidden: h,
            epochs_run: 0,
            loss_curve: Vec::new(),
        };
        let n_params = d * h + h + h + 1;
        let mut adam = Adam::new(n_params);
        let batch = p.batch_size.min(n);
        let mut order: Vec<usize> = (0..n).collect();
        let mut best_loss = f64::INFINITY;
        let mut no_improvement = 0;
        let mut grads = vec![0.0; n_params];
        let mut act = vec![0.0; h];
        let mut delta = vec![0.0; h];

        for _ in 0..p.max_epochs {
            order.shuffle(&mut rng);
            let mut epoch_loss = 0.0;
            for chunk in order.chunks(batch) {
                let bs = chunk.len() as f64;
                grads.fill(0.0);
                let (gw1, rest) = grads.split_at_mut(d * h);
                let (gb1, rest) = rest.split_at_mut(h);
                let (gw2, gb2) = rest.split_at_mut(h);
                let mut loss = 0.0;
                for &i in chunk {
                    let row = x.row(i);
                    net.hidden_layer(row, &mut act);
                    let z = act.iter().zip(&net.w2).map(|(a, w)| a * w).sum::<f64>() + net.b2;
                    let t = f64::from(y[i]);
                    loss += z.max(0.0) + (-z.abs()).exp().ln_1p() - t * z;
                    let dz = (sigmoid(z) - t) / bs;
                    gb2[0] += dz;
                    for k in 0..h {
                        gw2[k] += dz * act[k];
                        delta[k] = if act[k] > 0.0 { dz * net.w2[k] } else { 0.0 };
                        gb1[k] += delta[k];
                    }
                    for (j, &xj) in row.iter().enumerate() {
                        if xj == 0.0 {
                            continue;
                        }
                        for (g, dk) in gw1[j * h..(j + 1) * h].iter_mut().zip(&delta) {
                            *g += xj * dk;
                        }
                    }
                }
                let sq: f64 = net.w1.iter().chain(&net.w2).map(|w| w * w).sum();
                loss = loss / bs + 0.5 * p.alpha * sq / bs;
                for (g, w) in gw1.iter_mut().zip(&net.w1) {
                    *g += p.alpha * w / bs;
                }
                for (g, w) in gw2.iter_mut().zip(&net.w2) {
                    *g += p.alpha * w / bs;
                }
                let mut params: Vec<&mut f64> = net
                    .w1
                    .iter_mut()
                    .chain(net.b1.iter_mut())
                    .chain(net.w2.iter_mut())
                    .chain(std::iter::once(&mut net.b2))
                    .collect();
                adam.step(&mut params, &grads, p.learning_rate);
                epoch_loss += loss * bs;
            }
            let epoch_loss = epoch_loss / n as f64;
            net.loss_curve.push(epoch_loss);
            net.epochs_run += 1;
            if epoch_loss > best_loss - p.tol {
                no_improvement += 1;
            } else {
                no_improvement = 0;
            }
            best_loss = best_loss.min(epoch_loss);
            if no_improvement > p.n_iter_no_change {
                break;
            }
        }
        net
    }

    pub fn score_row(&self, row: &[f64]) -> f64 {
        let mut act = vec![0.0; self.hidden];
        self.hidden_layer(row, &mut act);
        sigmoid(act.iter().zip(&self.w2).map(|(a, w)| a * w).sum::<f64>() + self.b2)
    }
}
