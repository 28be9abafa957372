use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifiers::{ModelKind, TrainParams};
use crate::embeddings::Mode;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusFormat {
    #[default]
    Conllu,
    Jsonl,
}

impl std::str::FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conllu" => Ok(CorpusFormat::Conllu),
            "jsonl" => Ok(CorpusFormat::Jsonl),
            _ => Err(Error::Config(format!("unknown corpus format {s:?}"))),
        }
    }
}

/// Which statistical columns an ablation row sees besides its group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationScope {
    /// One feature group plus the full embedding.
    #[default]
    Joint,
    /// One feature group alone.
    Statistical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Name written to result rows; defaults to the corpus file stem.
    pub dataset: Option<String>,
    pub corpus: PathBuf,
    pub format: CorpusFormat,
    /// `doc_id<TAB>label` file; required for CoNLL-U corpora with labels.
    pub labels: Option<PathBuf>,
    pub lexicon_borrowed: Option<PathBuf>,
    pub lexicon_sino: Option<PathBuf>,
    pub tagmap: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub modes: Vec<Mode>,
    pub models: Vec<ModelKind>,
    pub params: TrainParams,
    pub test_fraction: f64,
    pub seed: u64,
    /// Training-set fractions for the data-size sweep.
    pub fractions: Vec<f64>,
    pub ablation_scope: AblationScope,
    /// Also z-score inputs for tree models.
    pub standardize_trees: bool,
    pub out: PathBuf,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: None,
            corpus: PathBuf::new(),
            format: CorpusFormat::Conllu,
            labels: None,
            lexicon_borrowed: None,
            lexicon_sino: None,
            tagmap: None,
            embeddings: None,
            modes: vec![Mode::Statistical],
            models: vec![
                ModelKind::LinearSvm,
                ModelKind::RandomForest,
                ModelKind::ExtraTrees,
            ],
            params: TrainParams::default(),
            test_fraction: 0.2,
            seed: 0,
            fractions: vec![0.25, 0.5, 0.75],
            ablation_scope: AblationScope::Joint,
            standardize_trees: false,
            out: PathBuf::from("results"),
            threads: None,
        }
    }
}

impl ExperimentConfig {
    /// Reads a JSON config; relative paths resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)?;
        if let Some(dir) = path.parent() {
            cfg.resolve_relative(dir);
        }
        Ok(cfg)
    }

    fn resolve_relative(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = dir.join(&*p);
            }
        };
        fix(&mut self.corpus);
        fix(&mut self.out);
        for p in [
            &mut self.labels,
            &mut self.lexicon_borrowed,
            &mut self.lexicon_sino,
            &mut self.tagmap,
            &mut self.embeddings,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn dataset_name(&self) -> String {
        self.dataset.clone().unwrap_or_else(|| {
            self.corpus
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "corpus".into())
        })
    }

    pub fn needs_embeddings(&self) -> bool {
        self.modes.iter().any(|m| m.uses_embeddings())
    }

    /// Checks field ranges and that referenced files exist.
    pub fn validate(&self) -> Result<()> {
        if self.corpus.as_os_str().is_empty() {
            return Err(Error::Config("no corpus given".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::Config("no modes given".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Config("no models given".into()));
        }
        if self.needs_embeddings() && self.embeddings.is_none() {
            return Err(Error::Config(
                "semantic and joint modes need an embedding table".into(),
            ));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Fraction(self.test_fraction));
        }
        if let Some(&f) = self.fractions.iter().find(|&&f| !(f > 0.0 && f <= 1.0)) {
            return Err(Error::Fraction(f));
        }
        let files = std::iter::once(&self.corpus).chain(
            [
                &self.labels,
                &self.lexicon_borrowed,
                &self.lexicon_sino,
                &self.tagmap,
                &self.embeddings,
            ]
            .into_iter()
            .flatten(),
        );
        for f in files {
            if !f.is_file() {
                return Err(Error::Config(format!("file not found: {}", f.display())));
            }
        }
        Ok(())
    }
}
