//! Random Forest and Extra Trees ensembles.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, DecisionTree, ThresholdMode, TreeParams};
use super::{check_training_data, unit_rng, Classifier};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::num::{argmax, Float};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForestVariant {
    RandomForest,
    ExtraTrees,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Candidate features per node; `None` means `ceil(sqrt(p))`.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
}

impl ForestParams {
    pub fn random_forest() -> Self {
        ForestParams {
            n_trees: 100,
            max_features: None,
            bootstrap: true,
            min_samples_split: 2,
            max_depth: None,
        }
    }

    pub fn extra_trees() -> Self {
        ForestParams {
            bootstrap: false,
            ..Self::random_forest()
        }
    }
}

impl Default for ForestParams {
    fn default() -> Self {
        Self::random_forest()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Float")]
pub struct ForestModel<F> {
    pub trees: Vec<DecisionTree<F>>,
    pub n_classes: usize,
    pub variant: ForestVariant,
    pub params: ForestParams,
    pub seed: u64,
}

impl<F: Float> ForestModel<F> {
    /// Sum of the leaf histograms reached in every tree.
    pub fn votes(&self, row: &[F]) -> Vec<usize> {
        let mut votes = vec![0usize; self.n_classes];
        for t in &self.trees {
            for (v, h) in votes.iter_mut().zip(t.leaf_histogram(row)) {
                *v += h;
            }
        }
        votes
    }
}

impl<F: Float> Classifier<F> for ForestModel<F> {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn n_features(&self) -> usize {
        self.trees[0].n_features
    }

    fn predict_row(&self, row: &[F]) -> usize {
        argmax(&self.votes(row))
    }
}

pub fn fit_forest<F: Float>(
    x: &Matrix<F>,
    y: &[usize],
    n_classes: usize,
    variant: ForestVariant,
    params: &ForestParams,
    seed: u64,
) -> Result<ForestModel<F>> {
    check_training_data(x, y, n_classes)?;
    if params.n_trees == 0 {
        return Err(Error::InvalidInput(
            "a forest needs at least one tree".into(),
        ));
    }
    let p = x.cols();
    let m = params
        .max_features
        .unwrap_or_else(|| (p as f64).sqrt().ceil() as usize)
        .clamp(1, p.max(1));
    let tree_params = TreeParams {
        max_features: Some(m),
        min_samples_split: params.min_samples_split,
        max_depth: params.max_depth,
        threshold: match variant {
            ForestVariant::RandomForest => ThresholdMode::Best,
            ForestVariant::ExtraTrees => ThresholdMode::Random,
        },
    };
    let n = x.rows();
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = unit_rng(seed, t as u64);
            let idx: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow(x, y, n_classes, idx, &tree_params, &mut rng)
        })
        .collect();
    Ok(ForestModel {
        trees,
        n_classes,
        variant,
        params: params.clone(),
        seed,
    })
}

/// Bootstrapped trees with best-threshold splits over `ceil(sqrt(p))`
/// candidate features.
pub fn fit_random_forest<F: Float>(
    x: &Matrix<F>,
    y: &[usize],
    n_classes: usize,
    params: &ForestParams,
    seed: u64,
) -> Result<ForestModel<F>> {
    fit_forest(x, y, n_classes, ForestVariant::RandomForest, params, seed)
}

/// Trees on the full sample with uniformly random thresholds.
pub fn fit_extra_trees<F: Float>(
    x: &Matrix<F>,
    y: &[usize],
    n_classes: usize,
    params: &ForestParams,
    seed: u64,
) -> Result<ForestModel<F>> {
    fit_forest(x, y, n_classes, ForestVariant::ExtraTrees, params, seed)
}
