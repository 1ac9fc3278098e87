//! Second-order gradient boosting of regression trees under logistic loss.
//!
//! Each tree is grown level by level with exact greedy split search: every
//! feature column is sorted once, and a single pass per level accumulates
//! gradient and hessian sums for all open nodes at once.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegNode {
    Leaf {
        weight: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegTree {
    pub nodes: Vec<RegNode>,
}

impl RegTree {
    pub fn value(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                RegNode::Leaf { weight } => return *weight,
                RegNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boosted {
    pub base_margin: f64,
    pub trees: Vec<RegTree>,
    /// Mean training log-loss after each round.
    pub train_logloss: Vec<f64>,
}

pub(crate) struct BoostParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub reg_lambda: f64,
    pub min_child_weight: f64,
    pub gamma: f64,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn logloss(margins: &[f64], y: &[u8]) -> f64 {
    let total: f64 = margins
        .iter()
        .zip(y)
        .map(|(&m, &t)| {
            // log(1 + e^m) - t*m, computed stably
            let softplus = m.max(0.0) + (-m.abs()).exp().ln_1p();
            softplus - f64::from(t) * m
        })
        .sum();
    total / margins.len() as f64
}

#[derive(Clone, Copy)]
struct SplitChoice {
    gain: f64,
    feature: usize,
    threshold: f64,
}

impl Boosted {
    pub(crate) fn fit(x: &Matrix, y: &[u8], p: &BoostParams) -> Boosted {
        let n = x.rows();
        let sorted: Vec<Vec<usize>> = (0..x.cols())
            .map(|f| {
                let mut idx: Vec<usize> = (0..n).collect();
                idx.sort_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)).then(a.cmp(&b)));
                idx
            })
            .collect();
        let mut margins = vec![0.0; n];
        let mut model = Boosted {
            base_margin: 0.0,
            trees: Vec::with_capacity(p.n_estimators),
            train_logloss: Vec::with_capacity(p.n_estimators),
        };
        let mut g = vec![0.0; n];
        let mut h = vec![0.0; n];
        for _ in 0..p.n_estimators {
            for i in 0..n {
                let prob = sigmoid(margins[i]);
                g[i] = prob - f64::from(y[i]);
                h[i] = prob * (1.0 - prob);
            }
            let (tree, leaf_of) = grow(x, &sorted, &g, &h, p);
            for i in 0..n {
                if let RegNode::Leaf { weight } = tree.nodes[leaf_of[i]] {
                    margins[i] += weight;
                }
            }
            model.trees.push(tree);
            model.train_logloss.push(logloss(&margins, y));
        }
        model
    }

    pub fn score_row(&self, row: &[f64]) -> f64 {
        sigmoid(self.base_margin + self.trees.iter().map(|t| t.value(row)).sum::<f64>())
    }
}

/// Returns the tree and, for every training row, the index of its leaf.
fn grow(x: &Matrix, sorted: &[Vec<usize>], g: &[f64], h: &[f64], p: &BoostParams) -> (RegTree, Vec<usize>) {
    let n = g.len();
    let lambda = p.reg_lambda;
    let mut nodes = vec![RegNode::Leaf { weight: 0.0 }];
    let mut node_of = vec![0usize; n];
    // Nodes still open for splitting and their (G, H) sums.
    let mut open: Vec<usize> = vec![0];
    let score = |gs: f64, hs: f64| gs * gs / (hs + lambda);
    let mut sums: Vec<(f64, f64)> = vec![(g.iter().sum(), h.iter().sum())];

    for _depth in 0..p.max_depth {
        if open.is_empty() {
            break;
        }
        // slot of each node id in `open`, usize::MAX when closed
        let mut slot = vec![usize::MAX; nodes.len()];
        for (k, &id) in open.iter().enumerate() {
            slot[id] = k;
        }
        let parent_sums: Vec<(f64, f64)> = open.iter().map(|&id| sums[id]).collect();
        let per_feature: Vec<Vec<Option<SplitChoice>>> = (0..x.cols())
            .into_par_iter()
            .map(|f| {
                let mut acc = vec![(0.0f64, 0.0f64); open.len()];
                let mut last: Vec<Option<f64>> = vec![None; open.len()];
                let mut best: Vec<Option<SplitChoice>> = vec![None; open.len()];
                for &i in &sorted[f] {
                    let k = slot[node_of[i]];
                    if k == usize::MAX {
                        continue;
                    }
                    let v = x.get(i, f);
                    if let Some(prev) = last[k] {
                        if v != prev {
                            let (gl, hl) = acc[k];
                            let (gt, ht) = parent_sums[k];
                            let (gr, hr) = (gt - gl, ht - hl);
                            if hl >= p.min_child_weight && hr >= p.min_child_weight {
                                let gain = 0.5 * (score(gl, hl) + score(gr, hr) - score(gt, ht)) - p.gamma;
                                if best[k].is_none_or(|b| gain > b.gain) {
                                    let mut threshold = 0.5 * (prev + v);
                                    if threshold >= v || !threshold.is_finite() {
                                        threshold = prev;
                                    }
                                    best[k] = Some(SplitChoice {
                                        gain,
                                        feature: f,
                                        threshold,
                                    });
                                }
                            }
                        }
                    }
                    acc[k].0 += g[i];
                    acc[k].1 += h[i];
                    last[k] = Some(v);
                }
                best
            })
            .collect();

        let mut next_open = Vec::new();
        let mut chosen: Vec<Option<SplitChoice>> = vec![None; open.len()];
        for (k, c) in chosen.iter_mut().enumerate() {
            for feature_best in &per_feature {
                if let Some(b) = feature_best[k] {
                    if b.gain > 0.0 && c.is_none_or(|cur| b.gain > cur.gain) {
                        *c = Some(b);
                    }
                }
            }
        }
        let mut children = vec![(0usize, 0usize); open.len()];
        for (k, &id) in open.iter().enumerate() {
            if let Some(c) = chosen[k] {
                let left = nodes.len();
                nodes.push(RegNode::Leaf { weight: 0.0 });
                nodes.push(RegNode::Leaf { weight: 0.0 });
                sums.push((0.0, 0.0));
                sums.push((0.0, 0.0));
                nodes[id] = RegNode::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    left,
                    right: left + 1,
                };
                children[k] = (left, left + 1);
                next_open.push(left);
                next_open.push(left + 1);
            }
        }
        for i in 0..n {
            let k = slot[node_of[i]];
            if k == usize::MAX {
                continue;
            }
            if let Some(c) = chosen[k] {
                let child = if x.get(i, c.feature) <= c.threshold {
                    children[k].0
                } else {
                    children[k].1
                };
                node_of[i] = child;
                sums[child].0 += g[i];
                sums[child].1 += h[i];
            }
        }
        open = next_open;
    }

    for (id, node) in nodes.iter_mut().enumerate() {
        if let RegNode::Leaf { weight } = node {
            let (gs, hs) = sums[id];
            *weight = -p.learning_rate * gs / (hs + lambda);
        }
    }
    (RegTree { nodes }, node_of)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_split_leaf_weights() {
        let x = Matrix::unnamed(&[vec![0.0], vec![0.0], vec![1.0], vec![1.0]]);
        let y = [0, 0, 1, 1];
        let p = BoostParams {
            n_estimators: 1,
            max_depth: 1,
            learning_rate: 1.0,
            reg_lambda: 0.0,
            min_child_weight: 0.0,
            gamma: 0.0,
        };
        let m = Boosted::fit(&x, &y, &p);
        // g = ±0.5, h = 0.25 per row, each leaf weight -G/H = ∓2
        assert_eq!(m.trees[0].value(&[0.0]), -2.0);
        assert_eq!(m.trees[0].value(&[1.0]), 2.0);
    }

    #[test]
    fn stable_sigmoid() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }
}
