//! Precomputed document embeddings and design-matrix assembly.
//!
//! Embedding tables are plain text with tab-separated fields. The header is
//! `#dim=<d>`, optionally followed by a `source=<tag>` field naming the
//! encoder and pooling; every other line is `<doc_id>` and `d` numbers.
//! Later `#` lines are comments.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::features::{Feature, FeatureGroup, FeatureVector};
use crate::matrix::Matrix;
use crate::num::Float;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<F> {
    pub dim: usize,
    pub source_tag: String,
    ids: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Vec<Vec<F>>,
}

impl<F: Float> EmbeddingTable<F> {
    pub fn new(dim: usize, source_tag: impl Into<String>) -> Self {
        EmbeddingTable {
            dim,
            source_tag: source_tag.into(),
            ids: Vec::new(),
            index: HashMap::new(),
            vectors: Vec::new(),
        }
    }

    pub fn insert(&mut self, id: impl Into<String>, v: Vec<F>) -> Result<()> {
        let id = id.into();
        if v.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value in embedding of {id}"
            )));
        }
        if self.index.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        self.index.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.vectors.push(v);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&[F]> {
        self.index.get(id).map(|&i| self.vectors[i].as_slice())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Renders the table in its text form.
    pub fn to_text(&self) -> String {
        let mut out = format!("#dim={}", self.dim);
        if !self.source_tag.is_empty() {
            out.push_str(&format!("\tsource={}", self.source_tag));
        }
        out.push('\n');
        for (id, v) in self.ids.iter().zip(&self.vectors) {
            out.push_str(id);
            for x in v {
                out.push('\t');
                out.push_str(&x.to_string());
            }
            out.push('\n');
        }
        out
    }
}

pub fn load_embedding_table<F: Float>(text: &str) -> Result<EmbeddingTable<F>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        msg: "missing `#dim=<d>` header".into(),
    })?;
    let header = header.trim_end_matches('\r');
    let mut parts = header.split('\t');
    let dim_part = parts.next().unwrap_or_default();
    let dim: usize = dim_part
        .strip_prefix("#dim=")
        .and_then(|d| d.trim().parse().ok())
        .filter(|&d| d > 0)
        .ok_or_else(|| Error::Parse {
            line: 1,
            msg: format!("expected `#dim=<d>` header, found {dim_part:?}"),
        })?;
    let mut source = String::new();
    for p in parts {
        if let Some(s) = p.strip_prefix("source=") {
            source = s.to_string();
        }
    }
    let mut table = EmbeddingTable::new(dim, source);
    for (no, line) in lines {
        let line_no = no + 1;
        let line = line.trim_end_matches('\r');
        if line.starts_with('#') {
            continue;
        }
        let mut cols = line.split('\t');
        let id = cols.next().unwrap_or_default().to_string();
        let values: Vec<&str> = cols.collect();
        if values.len() != dim {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("row {id} has {} values, expected {dim}", values.len()),
            });
        }
        let mut v = Vec::with_capacity(dim);
        for s in values {
            let x: f64 = s.trim().parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad number {s:?}"),
            })?;
            if !x.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("non-finite value {s:?}"),
                });
            }
            v.push(F::from_f64_lossy(x));
        }
        table.insert(id, v).map_err(|e| match e {
            Error::DuplicateId(id) => Error::Parse {
                line: line_no,
                msg: format!("duplicate document id {id}"),
            },
            other => other,
        })?;
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Statistical,
    Semantic,
    Joint,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Statistical => "statistical",
            Mode::Semantic => "semantic",
            Mode::Joint => "joint",
        }
    }

    pub fn uses_features(self) -> bool {
        self != Mode::Semantic
    }

    pub fn uses_embeddings(self) -> bool {
        self != Mode::Statistical
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "statistical" => Ok(Mode::Statistical),
            "semantic" => Ok(Mode::Semantic),
            "joint" => Ok(Mode::Joint),
            _ => Err(Error::InvalidInput(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix<F> {
    pub x: Matrix<F>,
    pub y: Vec<usize>,
    /// Number of leading statistical columns.
    pub p_stat: usize,
    pub column_names: Vec<String>,
    pub mode: Mode,
    pub doc_ids: Vec<String>,
}

impl<F: Float> DesignMatrix<F> {
    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }
}

/// Inputs for assembling rows: features and/or embeddings keyed by doc id.
#[derive(Debug, Clone, Copy)]
pub struct Sources<'a, F> {
    pub features: Option<&'a HashMap<String, FeatureVector<F>>>,
    pub table: Option<&'a EmbeddingTable<F>>,
}

fn column_names<F: Float>(
    mode: Mode,
    groups: &[FeatureGroup],
    table: Option<&EmbeddingTable<F>>,
) -> Vec<String> {
    let mut names = Vec::new();
    if mode.uses_features() {
        for f in Feature::ALL {
            if groups.contains(&f.group()) {
                names.push(f.name().to_string());
            }
        }
    }
    if mode.uses_embeddings() {
        if let Some(t) = table {
            names.extend((0..t.dim).map(|i| format!("emb_{i}")));
        }
    }
    names
}

/// Rows for the listed documents; every document must be covered.
fn build_rows<'d, F: Float>(
    docs: impl Iterator<Item = &'d str> + Clone,
    mode: Mode,
    groups: &[FeatureGroup],
    src: Sources<'_, F>,
) -> Result<(Matrix<F>, usize, Vec<String>)> {
    let features = match (mode.uses_features(), src.features) {
        (true, Some(f)) => Some(f),
        (true, None) => {
            return Err(Error::Missing {
                what: "feature vectors",
                ids: docs.map(str::to_string).collect(),
            })
        }
        (false, _) => None,
    };
    let table = match (mode.uses_embeddings(), src.table) {
        (true, Some(t)) => Some(t),
        (true, None) => {
            return Err(Error::Missing {
                what: "embeddings",
                ids: docs.map(str::to_string).collect(),
            })
        }
        (false, _) => None,
    };
    if let Some(f) = features {
        let missing: Vec<String> = docs
            .clone()
            .filter(|d| !f.contains_key(*d))
            .map(str::to_string)
            .collect();
        if !missing.is_empty() {
            return Err(Error::Missing {
                what: "feature vectors",
                ids: missing,
            });
        }
    }
    if let Some(t) = table {
        let missing: Vec<String> = docs
            .clone()
            .filter(|d| t.get(d).is_none())
            .map(str::to_string)
            .collect();
        if !missing.is_empty() {
            return Err(Error::Missing {
                what: "embeddings",
                ids: missing,
            });
        }
    }
    let stat_idx: Vec<usize> = if features.is_some() {
        Feature::ALL
            .iter()
            .filter(|f| groups.contains(&f.group()))
            .map(|f| f.index())
            .collect()
    } else {
        Vec::new()
    };
    let p_stat = stat_idx.len();
    let p = p_stat + table.map_or(0, |t| t.dim);
    let mut data = Vec::new();
    let mut n = 0;
    for id in docs {
        if let Some(f) = features {
            let v = &f[id];
            data.extend(stat_idx.iter().map(|&i| v.0[i]));
        }
        if let Some(t) = table {
            data.extend_from_slice(t.get(id).unwrap());
        }
        n += 1;
    }
    let names = column_names(mode, groups, table);
    debug_assert_eq!(names.len(), p);
    Ok((Matrix::from_vec(n, p, data)?, p_stat, names))
}

/// Design matrix over the labeled documents of `corpus`, in corpus order.
pub fn assemble<F: Float>(
    corpus: &Corpus,
    mode: Mode,
    src: Sources<'_, F>,
) -> Result<DesignMatrix<F>> {
    assemble_with_groups(corpus, mode, &FeatureGroup::ALL, src)
}

/// As [`assemble`], keeping only the statistical columns of `groups`.
pub fn assemble_with_groups<F: Float>(
    corpus: &Corpus,
    mode: Mode,
    groups: &[FeatureGroup],
    src: Sources<'_, F>,
) -> Result<DesignMatrix<F>> {
    let labeled: Vec<(&str, usize)> = corpus
        .documents
        .iter()
        .filter_map(|d| corpus.class_of(d).map(|c| (d.id.as_str(), c)))
        .collect();
    let (x, p_stat, column_names) =
        build_rows(labeled.iter().map(|(id, _)| *id), mode, groups, src)?;
    Ok(DesignMatrix {
        x,
        y: labeled.iter().map(|(_, c)| *c).collect(),
        p_stat,
        column_names,
        mode,
        doc_ids: labeled.iter().map(|(id, _)| id.to_string()).collect(),
    })
}

/// Feature rows for every document, labeled or not, for prediction.
pub fn assemble_unlabeled<F: Float>(
    corpus: &Corpus,
    mode: Mode,
    groups: &[FeatureGroup],
    src: Sources<'_, F>,
) -> Result<(Matrix<F>, Vec<String>)> {
    let (x, _, _) = build_rows(
        corpus.documents.iter().map(|d| d.id.as_str()),
        mode,
        groups,
        src,
    )?;
    Ok((x, corpus.documents.iter().map(|d| d.id.clone()).collect()))
}

/// Per-column z-scoring fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Float")]
pub struct Standardizer<F> {
    pub mean: Vec<F>,
    pub std: Vec<F>,
    /// Columns that are only centered.
    pub zero_variance: Vec<bool>,
}

impl<F: Float> Standardizer<F> {
    pub fn fit(x: &Matrix<F>) -> Result<Self> {
        if x.rows() == 0 {
            return Err(Error::InvalidInput(
                "cannot fit a standardizer on zero rows".into(),
            ));
        }
        let n = F::from_count(x.rows());
        let mut mean = Vec::with_capacity(x.cols());
        let mut std = Vec::with_capacity(x.cols());
        let mut zero_variance = Vec::with_capacity(x.cols());
        for j in 0..x.cols() {
            let m = x.column(j).sum::<F>() / n;
            let var = x.column(j).map(|v| (v - m) * (v - m)).sum::<F>() / n;
            let s = var.sqrt();
            let tol = F::epsilon() * F::from_count(16) * m.abs().max(F::one());
            let degenerate = s <= tol;
            mean.push(m);
            std.push(if degenerate { F::one() } else { s });
            zero_variance.push(degenerate);
        }
        Ok(Standardizer {
            mean,
            std,
            zero_variance,
        })
    }

    pub fn p(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &Matrix<F>) -> Result<Matrix<F>> {
        self.check(x)?;
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.std[j];
            }
        }
        Ok(out)
    }

    pub fn inverse(&self, x: &Matrix<F>) -> Result<Matrix<F>> {
        self.check(x)?;
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = *v * self.std[j] + self.mean[j];
            }
        }
        Ok(out)
    }

    pub fn apply_design(&self, m: &DesignMatrix<F>) -> Result<DesignMatrix<F>> {
        Ok(DesignMatrix {
            x: self.apply(&m.x)?,
            ..m.clone()
        })
    }

    fn check(&self, x: &Matrix<F>) -> Result<()> {
        if x.cols() != self.p() {
            return Err(Error::Dimension {
                expected: self.p(),
                got: x.cols(),
            });
        }
        Ok(())
    }
}

/// Doc-id keyed view of extracted features, in the shape `assemble` expects.
pub fn feature_map<F: Float>(
    corpus: &Corpus,
    vectors: &[FeatureVector<F>],
) -> HashMap<String, FeatureVector<F>> {
    corpus
        .documents
        .iter()
        .zip(vectors)
        .map(|(d, v)| (d.id.clone(), *v))
        .collect()
}
