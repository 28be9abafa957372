//! CART decision trees with Gini splits.
//!
//! Nodes live in a flat arena so deep trees neither recurse on the stack nor
//! hit serializer nesting limits.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_training_data, unit_rng, Classifier};
use crate::error::Result;
use crate::matrix::Matrix;
use crate::num::{argmax, Float};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Midpoints between consecutive distinct sorted values.
    Best,
    /// One uniform draw in `[min, max)` per candidate feature.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    /// Candidate features per node; `None` means all.
    pub max_features: Option<usize>,
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
    pub threshold: ThresholdMode,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_features: None,
            min_samples_split: 2,
            max_depth: None,
            threshold: ThresholdMode::Best,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Float", rename_all = "snake_case")]
pub enum TreeNode<F> {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: F,
        left: usize,
        right: usize,
    },
    Leaf {
        class: usize,
        histogram: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Float")]
pub struct DecisionTree<F> {
    /// Root is node 0.
    pub nodes: Vec<TreeNode<F>>,
    pub n_classes: usize,
    pub n_features: usize,
}

impl<F: Float> DecisionTree<F> {
    /// Class histogram of the leaf reached by `row`.
    pub fn leaf_histogram(&self, row: &[F]) -> &[usize] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
                TreeNode::Leaf { histogram, .. } => return histogram,
            }
        }
    }

    /// Edges on the longest root-to-leaf path, the unit of `max_depth`.
    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((i, d)) = stack.pop() {
            best = best.max(d);
            if let TreeNode::Split { left, right, .. } = &self.nodes[i] {
                stack.push((*left, d + 1));
                stack.push((*right, d + 1));
            }
        }
        best
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }
}

impl<F: Float> Classifier<F> for DecisionTree<F> {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_row(&self, row: &[F]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
                TreeNode::Leaf { class, .. } => return *class,
            }
        }
    }
}

fn histogram(y: &[usize], idx: &[usize], k: usize) -> Vec<usize> {
    let mut h = vec![0; k];
    for &i in idx {
        h[y[i]] += 1;
    }
    h
}

/// `sum(c^2) / n`; larger is purer. Gini impurity is `1 - purity / n`.
fn purity(h: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    h.iter().map(|&c| (c * c) as f64).sum::<f64>() / n as f64
}

struct Candidate<F> {
    feature: usize,
    threshold: F,
    score: f64,
}

fn best_threshold<F: Float>(
    x: &Matrix<F>,
    y: &[usize],
    idx: &[usize],
    feature: usize,
    k: usize,
    total: &[usize],
) -> Option<(F, f64)> {
    let mut order: Vec<usize> = idx.to_vec();
    order.sort_by(|&a, &b| x.get(a, feature).partial_cmp(&x.get(b, feature)).unwrap());
    let n = order.len();
    let mut left = vec![0usize; k];
    let mut best: Option<(F, f64)> = None;
    for pos in 0..n - 1 {
        left[y[order[pos]]] += 1;
        let a = x.get(order[pos], feature);
        let b = x.get(order[pos + 1], feature);
        if a >= b {
            continue;
        }
        let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
        let score = purity(&left, pos + 1) + purity(&right, n - pos - 1);
        if best.is_none_or(|(_, s)| score > s) {
            let two = F::one() + F::one();
            let mut mid = a + (b - a) / two;
            if mid >= b {
                mid = a;
            }
            best = Some((mid, score));
        }
    }
    best
}

fn random_threshold<F: Float>(
    x: &Matrix<F>,
    y: &[usize],
    idx: &[usize],
    feature: usize,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Option<(F, f64)> {
    let (mut lo, mut hi) = (F::infinity(), F::neg_infinity());
    for &i in idx {
        let v = x.get(i, feature);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo >= hi {
        return None;
    }
    let mut t = rng.random_range(lo..hi);
    if t >= hi {
        t = lo;
    }
    let mut left = vec![0usize; k];
    let mut right = vec![0usize; k];
    for &i in idx {
        if x.get(i, feature) <= t {
            left[y[i]] += 1;
        } else {
            right[y[i]] += 1;
        }
    }
    let nl: usize = left.iter().sum();
    Some((t, purity(&left, nl) + purity(&right, idx.len() - nl)))
}

/// Grows one tree over the rows listed in `idx` (repeats allowed).
pub(crate) fn grow<F: Float>(
    x: &Matrix<F>,
    y: &[usize],
    n_classes: usize,
    idx: Vec<usize>,
    params: &TreeParams,
    rng: &mut ChaCha8Rng,
) -> DecisionTree<F> {
    let p = x.cols();
    let m = params.max_features.unwrap_or(p).clamp(1, p.max(1));
    let mut nodes: Vec<TreeNode<F>> = vec![TreeNode::Leaf {
        class: 0,
        histogram: Vec::new(),
    }];
    // (node slot, rows, depth)
    let mut work = vec![(0usize, idx, 0usize)];
    while let Some((slot, rows, depth)) = work.pop() {
        let hist = histogram(y, &rows, n_classes);
        let n = rows.len();
        let pure = hist.iter().filter(|&&c| c > 0).count() <= 1;
        let stop = pure
            || n < params.min_samples_split.max(2)
            || params.max_depth.is_some_and(|d| depth >= d)
            || p == 0;
        let mut chosen: Option<Candidate<F>> = None;
        if !stop {
            // Any valid split of an impure node is taken, even with zero
            // Gini gain, so XOR-like cells still get separated further down.
            for feature in sample(rng, p, m).into_iter() {
                let found = match params.threshold {
                    ThresholdMode::Best => best_threshold(x, y, &rows, feature, n_classes, &hist),
                    ThresholdMode::Random => random_threshold(x, y, &rows, feature, n_classes, rng),
                };
                if let Some((threshold, score)) = found {
                    if chosen.as_ref().is_none_or(|c| score > c.score) {
                        chosen = Some(Candidate {
                            feature,
                            threshold,
                            score,
                        });
                    }
                }
            }
        }
        match chosen {
            Some(c) => {
                let (l, r): (Vec<usize>, Vec<usize>) = rows
                    .iter()
                    .partition(|&&i| x.get(i, c.feature) <= c.threshold);
                let left = nodes.len();
                let right = left + 1;
                nodes.push(TreeNode::Leaf {
                    class: 0,
                    histogram: Vec::new(),
                });
                nodes.push(TreeNode::Leaf {
                    class: 0,
                    histogram: Vec::new(),
                });
                nodes[slot] = TreeNode::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    left,
                    right,
                };
                work.push((right, r, depth + 1));
                work.push((left, l, depth + 1));
            }
            None => {
                nodes[slot] = TreeNode::Leaf {
                    class: argmax(&hist),
                    histogram: hist,
                };
            }
        }
    }
    DecisionTree {
        nodes,
        n_classes,
        n_features: p,
    }
}

/// Fits a single tree on all rows. Uses the same random stream as tree 0 of
/// a forest fitted with the same seed.
pub fn fit_tree<F: Float>(
    x: &Matrix<F>,
    y: &[usize],
    n_classes: usize,
    params: &TreeParams,
    seed: u64,
) -> Result<DecisionTree<F>> {
    check_training_data(x, y, n_classes)?;
    let mut rng = unit_rng(seed, 0);
    Ok(grow(
        x,
        y,
        n_classes,
        (0..x.rows()).collect(),
        params,
        &mut rng,
    ))
}
