//! Confusion-matrix metrics: accuracy, per-class precision/recall/F1 and
//! their macro average. Zero denominators yield zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub k: usize,
    pub counts: Vec<Vec<usize>>,
}

fn safe_div(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

impl ConfusionMatrix {
    pub fn new(y_true: &[usize], y_pred: &[usize], k: usize) -> Result<Self> {
        if y_true.len() != y_pred.len() {
            return Err(Error::Dimension {
                expected: y_true.len(),
                got: y_pred.len(),
            });
        }
        if y_true.is_empty() {
            return Err(Error::InvalidInput("no samples to evaluate".into()));
        }
        let mut counts = vec![vec![0; k]; k];
        for (&t, &p) in y_true.iter().zip(y_pred) {
            if t >= k || p >= k {
                return Err(Error::InvalidInput(format!(
                    "class index {} out of range for k={k}",
                    t.max(p)
                )));
            }
            counts[t][p] += 1;
        }
        Ok(ConfusionMatrix { k, counts })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.k).map(|c| self.counts[c][c]).sum()
    }

    fn row_sum(&self, c: usize) -> usize {
        self.counts[c].iter().sum()
    }

    fn col_sum(&self, c: usize) -> usize {
        self.counts.iter().map(|r| r[c]).sum()
    }

    pub fn precision(&self, c: usize) -> f64 {
        safe_div(self.counts[c][c] as f64, self.col_sum(c) as f64)
    }

    pub fn recall(&self, c: usize) -> f64 {
        safe_div(self.counts[c][c] as f64, self.row_sum(c) as f64)
    }

    pub fn f1(&self, c: usize) -> f64 {
        let (p, r) = (self.precision(c), self.recall(c));
        safe_div(2.0 * p * r, p + r)
    }

    pub fn accuracy(&self) -> f64 {
        safe_div(self.trace() as f64, self.total() as f64)
    }

    pub fn macro_f1(&self) -> f64 {
        if self.k == 0 {
            return 0.0;
        }
        (0..self.k).map(|c| self.f1(c)).sum::<f64>() / self.k as f64
    }
}

pub fn confusion(y_true: &[usize], y_pred: &[usize], k: usize) -> Result<ConfusionMatrix> {
    ConfusionMatrix::new(y_true, y_pred, k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub per_class: Vec<ClassScores>,
    pub macro_f1: f64,
    pub confusion: ConfusionMatrix,
    pub n: usize,
}

impl EvalReport {
    pub fn from_confusion(cm: ConfusionMatrix) -> Self {
        let per_class = (0..cm.k)
            .map(|c| ClassScores {
                precision: cm.precision(c),
                recall: cm.recall(c),
                f1: cm.f1(c),
            })
            .collect();
        EvalReport {
            accuracy: cm.accuracy(),
            macro_f1: cm.macro_f1(),
            n: cm.total(),
            per_class,
            confusion: cm,
        }
    }
}

pub fn evaluate(y_true: &[usize], y_pred: &[usize], k: usize) -> Result<EvalReport> {
    Ok(EvalReport::from_confusion(confusion(y_true, y_pred, k)?))
}
