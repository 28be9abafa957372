//! One-vs-rest linear SVM trained by stochastic subgradient descent on the
//! regularized hinge loss `lambda/2 |w|^2 + mean(max(0, 1 - s (w.x + b)))`.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_training_data, require_two_classes, unit_rng, Classifier};
use crate::error::Result;
use crate::matrix::Matrix;
use crate::num::{argmax, Float};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
    /// Step-size offset; `None` means `1 / lambda`.
    pub t0: Option<f64>,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 1e-4,
            epochs: 50,
            t0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Float")]
pub struct SvmModel<F> {
    /// One row of weights per class.
    pub weights: Matrix<F>,
    pub bias: Vec<F>,
    /// Inputs are expected to be standardized.
    pub requires_standardized: bool,
}

impl<F: Float> SvmModel<F> {
    pub fn scores(&self, row: &[F]) -> Vec<F> {
        (0..self.weights.rows())
            .map(|c| dot(self.weights.row(c), row) + self.bias[c])
            .collect()
    }
}

impl<F: Float> Classifier<F> for SvmModel<F> {
    fn n_classes(&self) -> usize {
        self.weights.rows()
    }

    fn n_features(&self) -> usize {
        self.weights.cols()
    }

    fn predict_row(&self, row: &[F]) -> usize {
        argmax(&self.scores(row))
    }
}

fn dot<F: Float>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn fit_binary<F: Float>(
    x: &Matrix<F>,
    y: &[usize],
    class: usize,
    params: &SvmParams,
    seed: u64,
) -> (Vec<F>, F) {
    let lambda = F::from_f64_lossy(params.lambda);
    let t0 = F::from_f64_lossy(params.t0.unwrap_or(1.0 / params.lambda));
    let mut rng = unit_rng(seed, class as u64);
    let mut w = vec![F::zero(); x.cols()];
    let mut b = F::zero();
    let mut order: Vec<usize> = (0..x.rows()).collect();
    let mut t = F::one();
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let eta = F::one() / (lambda * (t + t0));
            let s = if y[i] == class { F::one() } else { -F::one() };
            let row = x.row(i);
            let margin = s * (dot(&w, row) + b);
            let shrink = F::one() - eta * lambda;
            for wj in w.iter_mut() {
                *wj = *wj * shrink;
            }
            if margin < F::one() {
                for (wj, &xj) in w.iter_mut().zip(row) {
                    *wj = *wj + eta * s * xj;
                }
                b = b + eta * s;
            }
            t = t + F::one();
        }
    }
    (w, b)
}

pub fn fit_linear_svm<F: Float>(
    x: &Matrix<F>,
    y: &[usize],
    n_classes: usize,
    params: &SvmParams,
    seed: u64,
) -> Result<SvmModel<F>> {
    check_training_data(x, y, n_classes)?;
    require_two_classes(y)?;
    if params.lambda.is_nan() || params.lambda <= 0.0 {
        return Err(crate::error::invalid("SVM lambda must be positive"));
    }
    let fitted: Vec<(Vec<F>, F)> = (0..n_classes)
        .into_par_iter()
        .map(|c| fit_binary(x, y, c, params, seed))
        .collect();
    let mut data = Vec::with_capacity(n_classes * x.cols());
    let mut bias = Vec::with_capacity(n_classes);
    for (w, b) in fitted {
        data.extend(w);
        bias.push(b);
    }
    Ok(SvmModel {
        weights: Matrix::from_vec(n_classes, x.cols(), data)?,
        bias,
        requires_standardized: true,
    })
}
