//! Experiment protocols: per-mode training runs, feature-group ablation,
//! training-size sweep and feature-range summaries.
//!
//! Each (mode, model, scope) cell is independent. Its model seed depends only
//! on the global seed, the mode and the model, so cells may run in any order
//! or in parallel, and a full-scope ablation or 100% sweep cell reproduces
//! the matching training-run row.

pub mod config;
pub mod report;

use std::collections::HashMap;
use std::fs;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{fit, Classifier, Model, ModelKind, TrainParams};
use crate::corpus::{parse_conllu, parse_jsonl, stratified_split, subsample, Corpus, LabelMap};
use crate::embeddings::{
    assemble_with_groups, load_embedding_table, EmbeddingTable, Mode, Sources, Standardizer,
};
use crate::error::{Error, Result};
use crate::eval::{ConfusionMatrix, EvalReport};
use crate::features::{
    load_lexicon, Feature, FeatureExtractor, FeatureGroup, FeatureVector, Lexicon, LexiconKind,
    TagMap,
};

pub use config::{AblationScope, CorpusFormat, ExperimentConfig};

/// Version tag of serialized model files.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Mixes a key into a seed (FNV-1a over the key, then a SplitMix64 finalizer).
pub fn derive_seed(seed: u64, key: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed;
    for b in key.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

fn model_seed(seed: u64, mode: Mode, kind: ModelKind) -> u64 {
    derive_seed(seed, &format!("model/{}/{}", mode.name(), kind.name()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub mode: Mode,
    pub model: ModelKind,
    /// `all`, a feature-group name, or a training fraction.
    pub scope: String,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub confusion: ConfusionMatrix,
}

impl ResultRow {
    /// Recomputes the metrics from the stored confusion matrix.
    pub fn is_consistent(&self) -> bool {
        self.confusion.accuracy() == self.accuracy && self.confusion.macro_f1() == self.macro_f1
    }
}

/// A fitted model with everything needed to score new documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub format_version: u32,
    pub mode: Mode,
    pub groups: Vec<FeatureGroup>,
    pub label_set: Vec<String>,
    pub params: TrainParams,
    pub seed: u64,
    pub standardizer: Option<Standardizer<f64>>,
    pub model: Model<f64>,
}

impl SavedModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: SavedModel = serde_json::from_str(text)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported model format version {}",
                m.format_version
            )));
        }
        Ok(m)
    }

    pub fn kind(&self) -> ModelKind {
        self.model.kind()
    }

    pub fn predict(&self, x: &crate::matrix::Matrix<f64>) -> Result<Vec<usize>> {
        match &self.standardizer {
            Some(s) => self.model.predict(&s.apply(x)?),
            None => self.model.predict(x),
        }
    }
}

/// Corpus plus everything derived from the config's side files.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub corpus: Corpus,
    pub extractor: FeatureExtractor,
    pub features: HashMap<String, FeatureVector<f64>>,
    pub table: Option<EmbeddingTable<f64>>,
}

impl Dataset {
    pub fn sources(&self) -> Sources<'_, f64> {
        Sources {
            features: Some(&self.features),
            table: self.table.as_ref(),
        }
    }
}

pub fn load_corpus(cfg: &ExperimentConfig) -> Result<Corpus> {
    let text = fs::read_to_string(&cfg.corpus)?;
    let corpus = match cfg.format {
        CorpusFormat::Conllu => {
            let labels = match &cfg.labels {
                Some(p) => LabelMap::parse(&fs::read_to_string(p)?)?,
                None => LabelMap::default(),
            };
            parse_conllu(&text, &labels)?
        }
        CorpusFormat::Jsonl => match &cfg.labels {
            Some(p) => {
                // A label map next to a JSONL corpus only contributes the label order.
                let labels = LabelMap::parse(&fs::read_to_string(p)?)?;
                crate::corpus::parse_jsonl_with_labels(&text, Some(&labels.label_set()))?
            }
            None => parse_jsonl(&text)?,
        },
    };
    Ok(corpus.named(cfg.dataset_name()))
}

pub fn load_extractor(cfg: &ExperimentConfig) -> Result<FeatureExtractor> {
    let lexicon = |path: &Option<std::path::PathBuf>, kind| -> Result<Lexicon> {
        match path {
            Some(p) => load_lexicon(&fs::read_to_string(p)?, kind),
            None => Ok(Lexicon::empty(kind)),
        }
    };
    let tags = match &cfg.tagmap {
        Some(p) => TagMap::parse(&fs::read_to_string(p)?)?,
        None => TagMap::default(),
    };
    FeatureExtractor::new(
        lexicon(&cfg.lexicon_borrowed, LexiconKind::Borrowed)?,
        lexicon(&cfg.lexicon_sino, LexiconKind::SinoVietnamese)?,
        tags,
    )
}

pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    cfg.validate()?;
    let corpus = load_corpus(cfg)?;
    let extractor = load_extractor(cfg)?;
    let vectors = extractor.extract_corpus::<f64>(&corpus)?;
    let features = crate::embeddings::feature_map(&corpus, &vectors);
    let table = match &cfg.embeddings {
        Some(p) => Some(load_embedding_table(&fs::read_to_string(p)?)?),
        None => None,
    };
    Ok(Dataset {
        name: cfg.dataset_name(),
        corpus,
        extractor,
        features,
        table,
    })
}

/// One cell of an experiment grid.
#[derive(Debug, Clone)]
pub struct Cell<'a> {
    pub train: &'a Corpus,
    pub test: &'a Corpus,
    pub mode: Mode,
    pub groups: &'a [FeatureGroup],
    pub model: ModelKind,
    pub scope: String,
}

/// Fits on the train side, scores the test side.
pub fn run_cell(
    ds: &Dataset,
    cfg: &ExperimentConfig,
    cell: &Cell<'_>,
) -> Result<(ResultRow, SavedModel)> {
    let src = ds.sources();
    let train = assemble_with_groups(cell.train, cell.mode, cell.groups, src)?;
    let test = assemble_with_groups(cell.test, cell.mode, cell.groups, src)?;
    let standardizer = if cell.model.wants_standardized() || cfg.standardize_trees {
        Some(Standardizer::fit(&train.x)?)
    } else {
        None
    };
    let (x_train, x_test) = match &standardizer {
        Some(s) => (s.apply(&train.x)?, s.apply(&test.x)?),
        None => (train.x.clone(), test.x.clone()),
    };
    let k = ds.corpus.label_set.len();
    let seed = model_seed(cfg.seed, cell.mode, cell.model);
    let model = fit(cell.model, &x_train, &train.y, k, &cfg.params, seed)?;
    let predicted = model.predict(&x_test)?;
    let report = EvalReport::from_confusion(ConfusionMatrix::new(&test.y, &predicted, k)?);
    let row = ResultRow {
        dataset: ds.name.clone(),
        mode: cell.mode,
        model: cell.model,
        scope: cell.scope.clone(),
        accuracy: report.accuracy,
        macro_f1: report.macro_f1,
        n_train: train.n(),
        n_test: test.n(),
        confusion: report.confusion,
    };
    let saved = SavedModel {
        format_version: MODEL_FORMAT_VERSION,
        mode: cell.mode,
        groups: cell.groups.to_vec(),
        label_set: ds.corpus.label_set.clone(),
        params: cfg.params.clone(),
        seed,
        standardizer,
        model,
    };
    Ok((row, saved))
}

fn run_cells(
    ds: &Dataset,
    cfg: &ExperimentConfig,
    cells: &[Cell<'_>],
) -> Result<Vec<(ResultRow, SavedModel)>> {
    cells.par_iter().map(|c| run_cell(ds, cfg, c)).collect()
}

/// The seeded train/test split shared by every protocol.
pub fn split(ds: &Dataset, cfg: &ExperimentConfig) -> Result<(Corpus, Corpus)> {
    stratified_split(&ds.corpus, cfg.test_fraction, cfg.seed)
}

/// One row per (mode, model), plus the fitted models.
pub fn run_experiment_on(
    ds: &Dataset,
    cfg: &ExperimentConfig,
) -> Result<Vec<(ResultRow, SavedModel)>> {
    let (train, test) = split(ds, cfg)?;
    let cells: Vec<Cell<'_>> = cfg
        .modes
        .iter()
        .flat_map(|&mode| {
            cfg.models.iter().map({
                let (train, test) = (&train, &test);
                move |&model| Cell {
                    train,
                    test,
                    mode,
                    groups: &FeatureGroup::ALL,
                    model,
                    scope: "all".into(),
                }
            })
        })
        .collect();
    run_cells(ds, cfg, &cells)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let ds = load_dataset(cfg)?;
    Ok(run_experiment_on(&ds, cfg)?
        .into_iter()
        .map(|(r, _)| r)
        .collect())
}

/// Five feature groups times the configured models.
pub fn run_ablation_on(ds: &Dataset, cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let mode = match cfg.ablation_scope {
        AblationScope::Joint => Mode::Joint,
        AblationScope::Statistical => Mode::Statistical,
    };
    if mode == Mode::Joint && ds.table.is_none() {
        return Err(Error::Config(
            "joint ablation needs an embedding table".into(),
        ));
    }
    let (train, test) = split(ds, cfg)?;
    let groups: Vec<[FeatureGroup; 1]> = FeatureGroup::ALL.iter().map(|&g| [g]).collect();
    let mut cells = Vec::new();
    for g in &groups {
        for &model in &cfg.models {
            cells.push(Cell {
                train: &train,
                test: &test,
                mode,
                groups: g,
                model,
                scope: g[0].name().into(),
            });
        }
    }
    Ok(run_cells(ds, cfg, &cells)?
        .into_iter()
        .map(|(r, _)| r)
        .collect())
}

pub fn run_ablation(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    run_ablation_on(&load_dataset(cfg)?, cfg)
}

/// Fixed test split; nested stratified subsets of the training side.
pub fn run_size_sweep_on(
    ds: &Dataset,
    cfg: &ExperimentConfig,
    fractions: &[f64],
) -> Result<Vec<ResultRow>> {
    let (train, test) = split(ds, cfg)?;
    let sub_seed = derive_seed(cfg.seed, "subsample");
    let subsets: Vec<Corpus> = fractions
        .iter()
        .map(|&f| subsample(&train, f, sub_seed))
        .collect::<Result<_>>()?;
    let mut cells = Vec::new();
    for &mode in &cfg.modes {
        for (subset, f) in subsets.iter().zip(fractions) {
            for &model in &cfg.models {
                cells.push(Cell {
                    train: subset,
                    test: &test,
                    mode,
                    groups: &FeatureGroup::ALL,
                    model,
                    scope: f.to_string(),
                });
            }
        }
    }
    Ok(run_cells(ds, cfg, &cells)?
        .into_iter()
        .map(|(r, _)| r)
        .collect())
}

pub fn run_size_sweep(cfg: &ExperimentConfig, fractions: &[f64]) -> Result<Vec<ResultRow>> {
    run_size_sweep_on(&load_dataset(cfg)?, cfg, fractions)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRange {
    pub feature: Feature,
    pub min: f64,
    pub max: f64,
}

/// Per-feature minimum and maximum over the corpus, in feature order.
pub fn summarize_ranges(
    corpus: &Corpus,
    extractor: &FeatureExtractor,
) -> Result<Vec<FeatureRange>> {
    if corpus.is_empty() {
        return Err(Error::InvalidInput(
            "cannot summarize an empty corpus".into(),
        ));
    }
    let vectors = extractor.extract_corpus::<f64>(corpus)?;
    Ok(Feature::ALL
        .iter()
        .map(|&f| {
            let (min, max) = vectors
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v.get(f)), hi.max(v.get(f)))
                });
            FeatureRange {
                feature: f,
                min,
                max,
            }
        })
        .collect())
}
