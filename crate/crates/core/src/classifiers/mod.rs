//! Classifier families: decision tree, Random Forest, Extra Trees, linear
//! SVM and MLP, all generic over the scalar type.
//!
//! Every fitted unit (a tree, a one-vs-rest class, an MLP) draws from its own
//! ChaCha stream keyed by `(seed, unit index)`, so results do not depend on
//! how work is scheduled across threads.

pub mod forest;
pub mod mlp;
pub mod svm;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::num::Float;

pub use forest::{
    fit_extra_trees, fit_forest, fit_random_forest, ForestModel, ForestParams, ForestVariant,
};
pub use mlp::{fit_mlp, mlp_loss_and_grad, MlpGrad, MlpModel, MlpParams};
pub use svm::{fit_linear_svm, SvmModel, SvmParams};
pub use tree::{fit_tree, DecisionTree, ThresholdMode, TreeNode, TreeParams};

pub trait Classifier<F: Float> {
    fn n_classes(&self) -> usize;

    fn n_features(&self) -> usize;

    /// Row must have `n_features` values.
    fn predict_row(&self, row: &[F]) -> usize;

    fn predict(&self, x: &Matrix<F>) -> Result<Vec<usize>> {
        if x.rows() == 0 {
            return Err(Error::InvalidInput("nothing to predict".into()));
        }
        if x.cols() != self.n_features() {
            return Err(Error::Dimension {
                expected: self.n_features(),
                got: x.cols(),
            });
        }
        Ok(x.iter_rows().map(|r| self.predict_row(r)).collect())
    }
}

/// Random stream for one fitted unit.
pub fn unit_rng(seed: u64, unit: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(unit);
    rng
}

pub(crate) fn check_training_data<F: Float>(
    x: &Matrix<F>,
    y: &[usize],
    n_classes: usize,
) -> Result<()> {
    if x.rows() == 0 {
        return Err(Error::InvalidInput("empty training matrix".into()));
    }
    if x.rows() != y.len() {
        return Err(Error::Dimension {
            expected: x.rows(),
            got: y.len(),
        });
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= n_classes) {
        return Err(Error::InvalidInput(format!(
            "class index {bad} >= {n_classes}"
        )));
    }
    if !x.is_finite() {
        return Err(Error::InvalidInput(
            "non-finite value in training matrix".into(),
        ));
    }
    Ok(())
}

pub(crate) fn require_two_classes(y: &[usize]) -> Result<()> {
    if y.len() < 2 || y.iter().all(|&c| c == y[0]) {
        return Err(Error::InvalidInput(
            "need at least two classes to train".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    DecisionTree,
    RandomForest,
    ExtraTrees,
    #[serde(rename = "svm")]
    LinearSvm,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::DecisionTree,
        ModelKind::RandomForest,
        ModelKind::ExtraTrees,
        ModelKind::LinearSvm,
        ModelKind::Mlp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::DecisionTree => "decision_tree",
            ModelKind::RandomForest => "random_forest",
            ModelKind::ExtraTrees => "extra_trees",
            ModelKind::LinearSvm => "svm",
            ModelKind::Mlp => "mlp",
        }
    }

    /// Margin and gradient models get z-scored inputs.
    pub fn wants_standardized(self) -> bool {
        matches!(self, ModelKind::LinearSvm | ModelKind::Mlp)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown model {s:?}")))
    }
}

/// Hyperparameters for every family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainParams {
    pub tree: TreeParams,
    pub random_forest: ForestParams,
    pub extra_trees: ForestParams,
    pub svm: SvmParams,
    pub mlp: MlpParams,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            tree: TreeParams::default(),
            random_forest: ForestParams::random_forest(),
            extra_trees: ForestParams::extra_trees(),
            svm: SvmParams::default(),
            mlp: MlpParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Float", tag = "kind", rename_all = "snake_case")]
pub enum Model<F> {
    DecisionTree(DecisionTree<F>),
    RandomForest(ForestModel<F>),
    ExtraTrees(ForestModel<F>),
    #[serde(rename = "svm")]
    LinearSvm(SvmModel<F>),
    Mlp(MlpModel<F>),
}

impl<F: Float> Model<F> {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::DecisionTree(_) => ModelKind::DecisionTree,
            Model::RandomForest(_) => ModelKind::RandomForest,
            Model::ExtraTrees(_) => ModelKind::ExtraTrees,
            Model::LinearSvm(_) => ModelKind::LinearSvm,
            Model::Mlp(_) => ModelKind::Mlp,
        }
    }

    fn inner(&self) -> &dyn Classifier<F> {
        match self {
            Model::DecisionTree(m) => m,
            Model::RandomForest(m) | Model::ExtraTrees(m) => m,
            Model::LinearSvm(m) => m,
            Model::Mlp(m) => m,
        }
    }
}

impl<F: Float> Classifier<F> for Model<F> {
    fn n_classes(&self) -> usize {
        self.inner().n_classes()
    }

    fn n_features(&self) -> usize {
        self.inner().n_features()
    }

    fn predict_row(&self, row: &[F]) -> usize {
        self.inner().predict_row(row)
    }
}

pub fn fit<F: Float>(
    kind: ModelKind,
    x: &Matrix<F>,
    y: &[usize],
    n_classes: usize,
    params: &TrainParams,
    seed: u64,
) -> Result<Model<F>> {
    Ok(match kind {
        ModelKind::DecisionTree => {
            Model::DecisionTree(fit_tree(x, y, n_classes, &params.tree, seed)?)
        }
        ModelKind::RandomForest => Model::RandomForest(fit_random_forest(
            x,
            y,
            n_classes,
            &params.random_forest,
            seed,
        )?),
        ModelKind::ExtraTrees => {
            Model::ExtraTrees(fit_extra_trees(x, y, n_classes, &params.extra_trees, seed)?)
        }
        ModelKind::LinearSvm => {
            Model::LinearSvm(fit_linear_svm(x, y, n_classes, &params.svm, seed)?)
        }
        ModelKind::Mlp => Model::Mlp(fit_mlp(x, y, n_classes, &params.mlp, seed)?),
    })
}
