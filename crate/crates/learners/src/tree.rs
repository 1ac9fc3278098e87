//! Binary classification trees over numeric features.
//!
//! Splits are `x[feature] <= threshold` with thresholds at midpoints between
//! consecutive distinct values. Any split of an impure node is accepted, even
//! one with zero impurity decrease, so patterns such as XOR remain learnable.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Gini,
    Entropy,
    /// Per feature the threshold with the best information gain; across
    /// features the best gain ratio among those with at least average gain.
    GainRatio,
}

impl Criterion {
    pub(crate) fn parse(s: &str) -> Criterion {
        match s {
            "gini" => Criterion::Gini,
            "entropy" => Criterion::Entropy,
            "gain_ratio" => Criterion::GainRatio,
            other => unreachable!("criterion {other} passed validation"),
        }
    }

    fn impurity(self, w0: f64, w1: f64) -> f64 {
        let total = w0 + w1;
        if total <= 0.0 {
            return 0.0;
        }
        let (p0, p1) = (w0 / total, w1 / total);
        match self {
            Criterion::Gini => 1.0 - p0 * p0 - p1 * p1,
            Criterion::Entropy | Criterion::GainRatio => -xlog2x(p0) - xlog2x(p1),
        }
    }
}

fn xlog2x(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
pub(crate) struct GrowParams {
    pub criterion: Criterion,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Non-constant features examined per split; `None` examines all.
    pub max_features: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    /// Weighted fraction of class 1 among the node's training rows.
    Leaf { p1: f64 },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    /// Gini/Entropy: weighted child impurity (lower is better).
    /// GainRatio: information gain.
    score: f64,
    split_info: f64,
}

impl Tree {
    pub fn leaf_value(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { p1 } => return *p1,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Grows a tree on the rows in `samples`, each weighted by `weights[row]`.
    /// `rng` is consulted only when `max_features` restricts the candidates.
    pub(crate) fn grow<R: Rng>(
        x: &Matrix,
        y: &[u8],
        weights: &[f64],
        samples: Vec<usize>,
        params: &GrowParams,
        rng: &mut R,
    ) -> Tree {
        let mut nodes = vec![Node::Leaf { p1: 0.0 }];
        let mut work = vec![(0usize, samples, 0usize)];
        let mut order: Vec<usize> = (0..x.cols()).collect();
        while let Some((id, rows, depth)) = work.pop() {
            let (w0, w1) = class_weights(&rows, y, weights);
            let p1 = if w0 + w1 > 0.0 { w1 / (w0 + w1) } else { 0.0 };
            let stop = w0 <= 0.0
                || w1 <= 0.0
                || rows.len() < params.min_samples_split
                || params.max_depth.is_some_and(|d| depth >= d);
            let split = if stop {
                None
            } else {
                best_split(x, y, weights, &rows, params, &mut order, rng)
            };
            let Some(c) = split else {
                nodes[id] = Node::Leaf { p1 };
                continue;
            };
            let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x.get(i, c.feature) <= c.threshold);
            let left = nodes.len();
            nodes.push(Node::Leaf { p1: 0.0 });
            nodes.push(Node::Leaf { p1: 0.0 });
            nodes[id] = Node::Split {
                feature: c.feature,
                threshold: c.threshold,
                left,
                right: left + 1,
            };
            work.push((left + 1, r, depth + 1));
            work.push((left, l, depth + 1));
        }
        Tree { nodes }
    }
}

fn class_weights(rows: &[usize], y: &[u8], weights: &[f64]) -> (f64, f64) {
    let mut w = [0.0, 0.0];
    for &i in rows {
        w[y[i] as usize] += weights[i];
    }
    (w[0], w[1])
}

fn best_split<R: Rng>(
    x: &Matrix,
    y: &[u8],
    weights: &[f64],
    rows: &[usize],
    params: &GrowParams,
    order: &mut [usize],
    rng: &mut R,
) -> Option<Candidate> {
    let d = order.len();
    for (k, slot) in order.iter_mut().enumerate() {
        *slot = k;
    }
    let budget = params.max_features.unwrap_or(d).min(d);
    let mut per_feature: Vec<Candidate> = Vec::new();
    let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
    let mut examined = 0;
    for j in 0..d {
        if examined == budget {
            break;
        }
        if params.max_features.is_some() {
            let pick = rng.random_range(j..d);
            order.swap(j, pick);
        }
        let f = order[j];
        sorted.clear();
        sorted.extend(rows.iter().map(|&i| (x.get(i, f), i)));
        sorted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if sorted[0].0 == sorted[sorted.len() - 1].0 {
            continue;
        }
        examined += 1;
        if let Some(c) = scan_feature(f, &sorted, y, weights, params.criterion) {
            per_feature.push(c);
        }
    }
    choose(per_feature, params.criterion)
}

/// Best threshold on one feature given rows sorted by that feature.
fn scan_feature(
    feature: usize,
    sorted: &[(f64, usize)],
    y: &[u8],
    weights: &[f64],
    crit: Criterion,
) -> Option<Candidate> {
    let mut total = [0.0, 0.0];
    for &(_, i) in sorted {
        total[y[i] as usize] += weights[i];
    }
    let wt = total[0] + total[1];
    let parent = crit.impurity(total[0], total[1]);
    let mut left = [0.0, 0.0];
    let mut best: Option<Candidate> = None;
    for k in 0..sorted.len() - 1 {
        let (v, i) = sorted[k];
        left[y[i] as usize] += weights[i];
        let next = sorted[k + 1].0;
        if v == next {
            continue;
        }
        let wl = left[0] + left[1];
        let wr = wt - wl;
        let child =
            (wl * crit.impurity(left[0], left[1]) + wr * crit.impurity(total[0] - left[0], total[1] - left[1])) / wt;
        let score = match crit {
            Criterion::GainRatio => parent - child,
            _ => child,
        };
        let better = match &best {
            None => true,
            Some(b) if crit == Criterion::GainRatio => score > b.score,
            Some(b) => score < b.score,
        };
        if better {
            let mut threshold = 0.5 * (v + next);
            if threshold >= next || !threshold.is_finite() {
                threshold = v;
            }
            let (ql, qr) = (wl / wt, wr / wt);
            best = Some(Candidate {
                feature,
                threshold,
                score,
                split_info: -xlog2x(ql) - xlog2x(qr),
            });
        }
    }
    best
}

fn choose(cands: Vec<Candidate>, crit: Criterion) -> Option<Candidate> {
    if crit != Criterion::GainRatio {
        return cands.into_iter().reduce(|b, c| if c.score < b.score { c } else { b });
    }
    if cands.is_empty() {
        return None;
    }
    let mean_gain = cands.iter().map(|c| c.score).sum::<f64>() / cands.len() as f64;
    let ratio = |c: &Candidate| {
        if c.split_info > 0.0 {
            c.score / c.split_info
        } else {
            0.0
        }
    };
    cands
        .into_iter()
        .filter(|c| c.score >= mean_gain - 1e-12)
        .reduce(|b, c| if ratio(&c) > ratio(&b) { c } else { b })
}
