//! Single-hidden-layer perceptron: rectifier hidden units, softmax output,
//! mean cross-entropy loss, trained with Adam on mini-batches.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_training_data, require_two_classes, unit_rng, Classifier};
use crate::error::{invalid, Result};
use crate::matrix::Matrix;
use crate::num::{argmax, Float};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpParams {
    pub hidden: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Share of each class held out for early stopping; 0 disables it.
    pub validation_fraction: f64,
    pub patience: usize,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden: 100,
            batch_size: 32,
            epochs: 200,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            validation_fraction: 0.1,
            patience: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Float")]
pub struct MlpModel<F> {
    pub n_inputs: usize,
    pub hidden: usize,
    pub n_classes: usize,
    /// `hidden x n_inputs`, row-major.
    pub w1: Vec<F>,
    pub b1: Vec<F>,
    /// `n_classes x hidden`, row-major.
    pub w2: Vec<F>,
    pub b2: Vec<F>,
}

/// Gradient with the same layout as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrad<F> {
    pub w1: Vec<F>,
    pub b1: Vec<F>,
    pub w2: Vec<F>,
    pub b2: Vec<F>,
}

impl<F: Float> MlpGrad<F> {
    /// Concatenation `w1 | b1 | w2 | b2`, matching [`MlpModel::params`].
    pub fn flatten(&self) -> Vec<F> {
        [&self.w1[..], &self.b1, &self.w2, &self.b2].concat()
    }

    pub fn norm(&self) -> F {
        self.flatten().iter().map(|&g| g * g).sum::<F>().sqrt()
    }
}

struct Forward<F> {
    pre: Vec<F>,
    act: Vec<F>,
    logits: Vec<F>,
}

fn softmax<F: Float>(logits: &[F]) -> Vec<F> {
    let max = logits.iter().copied().fold(F::neg_infinity(), F::max);
    let exp: Vec<F> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: F = exp.iter().copied().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

impl<F: Float> MlpModel<F> {
    /// All-zero parameters.
    pub fn zeros(n_inputs: usize, hidden: usize, n_classes: usize) -> Self {
        MlpModel {
            n_inputs,
            hidden,
            n_classes,
            w1: vec![F::zero(); hidden * n_inputs],
            b1: vec![F::zero(); hidden],
            w2: vec![F::zero(); n_classes * hidden],
            b2: vec![F::zero(); n_classes],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(n_inputs: usize, hidden: usize, n_classes: usize, rng: &mut impl Rng) -> Self {
        let mut m = Self::zeros(n_inputs, hidden, n_classes);
        let limit = |fan_in: usize, fan_out: usize| {
            F::from_f64_lossy((6.0 / (fan_in + fan_out) as f64).sqrt())
        };
        let a1 = limit(n_inputs, hidden);
        for w in m.w1.iter_mut() {
            *w = rng.random_range(-a1..a1);
        }
        let a2 = limit(hidden, n_classes);
        for w in m.w2.iter_mut() {
            *w = rng.random_range(-a2..a2);
        }
        m
    }

    pub fn n_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    pub fn params(&self) -> Vec<F> {
        [&self.w1[..], &self.b1, &self.w2, &self.b2].concat()
    }

    pub fn set_params(&mut self, flat: &[F]) {
        assert_eq!(flat.len(), self.n_params(), "parameter vector length");
        let (w1, rest) = flat.split_at(self.w1.len());
        let (b1, rest) = rest.split_at(self.b1.len());
        let (w2, b2) = rest.split_at(self.w2.len());
        self.w1.copy_from_slice(w1);
        self.b1.copy_from_slice(b1);
        self.w2.copy_from_slice(w2);
        self.b2.copy_from_slice(b2);
    }

    fn forward(&self, row: &[F]) -> Forward<F> {
        let p = self.n_inputs;
        let pre: Vec<F> = (0..self.hidden)
            .map(|j| {
                self.w1[j * p..(j + 1) * p]
                    .iter()
                    .zip(row)
                    .map(|(&w, &x)| w * x)
                    .sum::<F>()
                    + self.b1[j]
            })
            .collect();
        let act: Vec<F> = pre.iter().map(|&z| z.max(F::zero())).collect();
        let h = self.hidden;
        let logits = (0..self.n_classes)
            .map(|c| {
                self.w2[c * h..(c + 1) * h]
                    .iter()
                    .zip(&act)
                    .map(|(&w, &a)| w * a)
                    .sum::<F>()
                    + self.b2[c]
            })
            .collect();
        Forward { pre, act, logits }
    }

    pub fn predict_proba(&self, row: &[F]) -> Vec<F> {
        softmax(&self.forward(row).logits)
    }

    /// Mean cross-entropy and its gradient over the listed rows.
    fn loss_and_grad_rows(&self, x: &Matrix<F>, y: &[usize], rows: &[usize]) -> (F, MlpGrad<F>) {
        let (p, h, k) = (self.n_inputs, self.hidden, self.n_classes);
        let mut g = MlpGrad {
            w1: vec![F::zero(); h * p],
            b1: vec![F::zero(); h],
            w2: vec![F::zero(); k * h],
            b2: vec![F::zero(); k],
        };
        let mut loss = F::zero();
        let mut d_act = vec![F::zero(); h];
        for &i in rows {
            let row = x.row(i);
            let f = self.forward(row);
            let max = f.logits.iter().copied().fold(F::neg_infinity(), F::max);
            let lse = max + f.logits.iter().map(|&z| (z - max).exp()).sum::<F>().ln();
            loss = loss + lse - f.logits[y[i]];
            let mut d_logits = softmax(&f.logits);
            d_logits[y[i]] = d_logits[y[i]] - F::one();
            d_act.iter_mut().for_each(|v| *v = F::zero());
            for (c, &d) in d_logits.iter().enumerate() {
                g.b2[c] = g.b2[c] + d;
                let gw2 = &mut g.w2[c * h..(c + 1) * h];
                let w2 = &self.w2[c * h..(c + 1) * h];
                for ((gw, &a), (da, &w)) in gw2.iter_mut().zip(&f.act).zip(d_act.iter_mut().zip(w2))
                {
                    *gw = *gw + d * a;
                    *da = *da + d * w;
                }
            }
            for (j, &d) in d_act.iter().enumerate() {
                if f.pre[j] <= F::zero() {
                    continue;
                }
                g.b1[j] = g.b1[j] + d;
                for (gw, &xv) in g.w1[j * p..(j + 1) * p].iter_mut().zip(row) {
                    *gw = *gw + d * xv;
                }
            }
        }
        let n = F::from_count(rows.len().max(1));
        for v in
            g.w1.iter_mut()
                .chain(&mut g.b1)
                .chain(&mut g.w2)
                .chain(&mut g.b2)
        {
            *v = *v / n;
        }
        (loss / n, g)
    }

    fn loss_rows(&self, x: &Matrix<F>, y: &[usize], rows: &[usize]) -> F {
        let total: F = rows
            .iter()
            .map(|&i| {
                let f = self.forward(x.row(i));
                let max = f.logits.iter().copied().fold(F::neg_infinity(), F::max);
                max + f.logits.iter().map(|&z| (z - max).exp()).sum::<F>().ln() - f.logits[y[i]]
            })
            .sum();
        total / F::from_count(rows.len().max(1))
    }
}

impl<F: Float> Classifier<F> for MlpModel<F> {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn n_features(&self) -> usize {
        self.n_inputs
    }

    fn predict_row(&self, row: &[F]) -> usize {
        argmax(&self.predict_proba(row))
    }
}

/// Mean cross-entropy over all rows and its analytic gradient.
pub fn mlp_loss_and_grad<F: Float>(
    model: &MlpModel<F>,
    x: &Matrix<F>,
    y: &[usize],
) -> Result<(F, MlpGrad<F>)> {
    check_training_data(x, y, model.n_classes)?;
    if x.cols() != model.n_inputs {
        return Err(crate::error::Error::Dimension {
            expected: model.n_inputs,
            got: x.cols(),
        });
    }
    let rows: Vec<usize> = (0..x.rows()).collect();
    Ok(model.loss_and_grad_rows(x, y, &rows))
}

/// Stratified hold-out: per class with at least two rows, the rounded
/// fraction (minimum one, leaving one for training) goes to validation.
fn validation_split(
    y: &[usize],
    n_classes: usize,
    fraction: f64,
    rng: &mut impl Rng,
) -> (Vec<usize>, Vec<usize>) {
    let mut by_class = vec![Vec::new(); n_classes];
    for (i, &c) in y.iter().enumerate() {
        by_class[c].push(i);
    }
    let mut train = Vec::new();
    let mut val = Vec::new();
    for mut members in by_class {
        members.shuffle(rng);
        let k = if fraction > 0.0 && members.len() >= 2 {
            ((fraction * members.len() as f64 + 0.5).floor() as usize).clamp(1, members.len() - 1)
        } else {
            0
        };
        val.extend_from_slice(&members[..k]);
        train.extend_from_slice(&members[k..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

struct Adam<F> {
    m: Vec<F>,
    v: Vec<F>,
    t: i32,
    lr: F,
    beta1: F,
    beta2: F,
    eps: F,
}

impl<F: Float> Adam<F> {
    fn new(n: usize, p: &MlpParams) -> Self {
        Adam {
            m: vec![F::zero(); n],
            v: vec![F::zero(); n],
            t: 0,
            lr: F::from_f64_lossy(p.learning_rate),
            beta1: F::from_f64_lossy(p.beta1),
            beta2: F::from_f64_lossy(p.beta2),
            eps: F::from_f64_lossy(p.epsilon),
        }
    }

    fn step(&mut self, params: &mut [F], grad: &[F]) {
        self.t += 1;
        let one = F::one();
        let c1 = one - self.beta1.powi(self.t);
        let c2 = one - self.beta2.powi(self.t);
        for ((w, &g), (m, v)) in params
            .iter_mut()
            .zip(grad)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = self.beta1 * *m + (one - self.beta1) * g;
            *v = self.beta2 * *v + (one - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *w = *w - self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

pub fn fit_mlp<F: Float>(
    x: &Matrix<F>,
    y: &[usize],
    n_classes: usize,
    params: &MlpParams,
    seed: u64,
) -> Result<MlpModel<F>> {
    check_training_data(x, y, n_classes)?;
    require_two_classes(y)?;
    if params.hidden == 0 || params.batch_size == 0 {
        return Err(invalid("MLP hidden size and batch size must be positive"));
    }
    if params.learning_rate.is_nan() || params.learning_rate <= 0.0 {
        return Err(invalid("MLP learning rate must be positive"));
    }
    let mut rng = unit_rng(seed, 0);
    let mut model = MlpModel::init(x.cols(), params.hidden, n_classes, &mut rng);
    let (mut train, val) = validation_split(y, n_classes, params.validation_fraction, &mut rng);
    let mut adam = Adam::new(model.n_params(), params);
    let mut flat = model.params();
    let mut best: Option<(F, Vec<F>)> = None;
    let mut stale = 0;
    let tol = F::from_f64_lossy(1e-4);
    for _ in 0..params.epochs {
        train.shuffle(&mut rng);
        for batch in train.chunks(params.batch_size) {
            let (_, g) = model.loss_and_grad_rows(x, y, batch);
            adam.step(&mut flat, &g.flatten());
            model.set_params(&flat);
        }
        if val.is_empty() {
            continue;
        }
        let loss = model.loss_rows(x, y, &val);
        match &best {
            Some((b, _)) if loss >= *b - tol => {
                stale += 1;
                if stale >= params.patience {
                    break;
                }
            }
            _ => {
                best = Some((loss, flat.clone()));
                stale = 0;
            }
        }
    }
    if let Some((_, p)) = best {
        model.set_params(&p);
    }
    Ok(model)
}
