use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use readability::classifiers::ModelKind;
use readability::corpus::stratified_split;
use readability::embeddings::{assemble_unlabeled, assemble_with_groups, Mode};
use readability::eval::{ConfusionMatrix, EvalReport};
use readability::features::write_features_csv;
use readability::harness::report::{render_table, write_ranges, write_results};
use readability::harness::{
    load_corpus, load_dataset, load_extractor, run_ablation_on, run_experiment_on,
    run_size_sweep_on, summarize_ranges, AblationScope, CorpusFormat, ExperimentConfig, ResultRow,
    SavedModel,
};
use readability::{Error, Result};

#[derive(Parser)]
#[command(
    name = "readability",
    version,
    about = "Readability assessment from linguistic features and embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the 14 statistical features of every document to features.csv.
    Extract(Common),
    /// Train and evaluate every (mode, model) pair on the seeded split.
    Train(Common),
    /// Score a saved model on a corpus.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model_file: PathBuf,
        /// Evaluate on all labeled documents or only the seeded test split.
        #[arg(long, value_enum, default_value_t = EvalSplit::All)]
        split: EvalSplit,
    },
    /// Predict labels with a saved model; writes predictions.csv.
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model_file: PathBuf,
    },
    /// Per-feature-group ablation (5 groups x models).
    Ablate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        ablation_scope: Option<ScopeArg>,
    },
    /// Training-size sweep over nested stratified subsets.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        fractions: Vec<f64>,
    },
    /// Per-feature min/max over the corpus; writes ranges.csv.
    Ranges(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalSplit {
    All,
    Test,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    Joint,
    Statistical,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Conllu,
    Jsonl,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// doc_id<TAB>label file.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    lexicon_borrowed: Option<PathBuf>,
    #[arg(long)]
    lexicon_sino: Option<PathBuf>,
    #[arg(long)]
    tagmap: Option<PathBuf>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// statistical, semantic or joint; repeat or comma-separate.
    #[arg(long, value_delimiter = ',')]
    mode: Vec<String>,
    /// decision_tree, random_forest, extra_trees, svm or mlp.
    #[arg(long, value_delimiter = ',')]
    model: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($field:ident) => {
                if let Some(v) = &self.$field {
                    cfg.$field = v.clone();
                }
            };
            (opt $field:ident) => {
                if let Some(v) = &self.$field {
                    cfg.$field = Some(v.clone());
                }
            };
        }
        set!(corpus);
        set!(seed);
        set!(test_fraction);
        set!(out);
        set!(opt labels);
        set!(opt lexicon_borrowed);
        set!(opt lexicon_sino);
        set!(opt tagmap);
        set!(opt embeddings);
        set!(opt threads);
        if let Some(f) = self.format {
            cfg.format = match f {
                FormatArg::Conllu => CorpusFormat::Conllu,
                FormatArg::Jsonl => CorpusFormat::Jsonl,
            };
        }
        if !self.mode.is_empty() {
            cfg.modes = self
                .mode
                .iter()
                .map(|m| m.parse::<Mode>())
                .collect::<Result<_>>()?;
        }
        if !self.model.is_empty() {
            cfg.models = self
                .model
                .iter()
                .map(|m| m.parse::<ModelKind>())
                .collect::<Result<_>>()?;
        }
        Ok(cfg)
    }
}

fn read_model(path: &Path) -> Result<SavedModel> {
    SavedModel::from_json(&fs::read_to_string(path)?)
}

fn emit(cfg: &ExperimentConfig, rows: &[ResultRow]) -> Result<()> {
    write_results(&cfg.out, rows)?;
    print!("{}", render_table(rows));
    Ok(())
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Extract(common) => {
            let cfg = common.config()?;
            let corpus = load_corpus(&cfg)?;
            let vectors = load_extractor(&cfg)?.extract_corpus::<f64>(&corpus)?;
            fs::create_dir_all(&cfg.out)?;
            let path = cfg.out.join("features.csv");
            write_features_csv(fs::File::create(&path)?, &corpus, &vectors)?;
            println!("wrote {} rows to {}", vectors.len(), path.display());
        }
        Command::Train(common) => {
            let cfg = common.config()?;
            with_threads(&cfg, || {
                let ds = load_dataset(&cfg)?;
                let results = run_experiment_on(&ds, &cfg)?;
                let models_dir = cfg.out.join("models");
                fs::create_dir_all(&models_dir)?;
                for (row, saved) in &results {
                    let name = format!("{}_{}.json", row.mode.name(), row.model.name());
                    fs::write(models_dir.join(name), saved.to_json()?)?;
                }
                let rows: Vec<ResultRow> = results.into_iter().map(|(r, _)| r).collect();
                emit(&cfg, &rows)
            })?;
        }
        Command::Evaluate {
            common,
            model_file,
            split,
        } => {
            let mut cfg = common.config()?;
            let saved = read_model(&model_file)?;
            cfg.modes = vec![saved.mode];
            let ds = load_dataset(&cfg)?;
            check_labels(&saved, &ds.corpus.label_set)?;
            let (corpus, scope) = match split {
                EvalSplit::All => (ds.corpus.clone(), "all"),
                EvalSplit::Test => (
                    stratified_split(&ds.corpus, cfg.test_fraction, cfg.seed)?.1,
                    "test",
                ),
            };
            let m = assemble_with_groups(&corpus, saved.mode, &saved.groups, ds.sources())?;
            let predicted = saved.predict(&m.x)?;
            let k = saved.label_set.len();
            let report = EvalReport::from_confusion(ConfusionMatrix::new(&m.y, &predicted, k)?);
            let row = ResultRow {
                dataset: ds.name.clone(),
                mode: saved.mode,
                model: saved.kind(),
                scope: scope.into(),
                accuracy: report.accuracy,
                macro_f1: report.macro_f1,
                n_train: 0,
                n_test: m.n(),
                confusion: report.confusion,
            };
            emit(&cfg, &[row])?;
        }
        Command::Predict { common, model_file } => {
            let mut cfg = common.config()?;
            let saved = read_model(&model_file)?;
            cfg.modes = vec![saved.mode];
            let ds = load_dataset(&cfg)?;
            let (x, ids) = assemble_unlabeled(&ds.corpus, saved.mode, &saved.groups, ds.sources())?;
            let predicted = saved.predict(&x)?;
            fs::create_dir_all(&cfg.out)?;
            let path = cfg.out.join("predictions.csv");
            let mut w = csv::Writer::from_path(&path).map_err(Error::from)?;
            w.write_record(["doc_id", "label"]).map_err(Error::from)?;
            for (id, c) in ids.iter().zip(predicted) {
                w.write_record([id.as_str(), saved.label_set[c].as_str()])
                    .map_err(Error::from)?;
            }
            w.flush()?;
            println!("wrote {} predictions to {}", ids.len(), path.display());
        }
        Command::Ablate {
            common,
            ablation_scope,
        } => {
            let mut cfg = common.config()?;
            if let Some(s) = ablation_scope {
                cfg.ablation_scope = match s {
                    ScopeArg::Joint => AblationScope::Joint,
                    ScopeArg::Statistical => AblationScope::Statistical,
                };
            }
            if cfg.ablation_scope == AblationScope::Joint && common.mode.is_empty() {
                cfg.modes = vec![Mode::Joint];
            }
            with_threads(&cfg, || {
                let ds = load_dataset(&cfg)?;
                emit(&cfg, &run_ablation_on(&ds, &cfg)?)
            })?;
        }
        Command::Sweep { common, fractions } => {
            let mut cfg = common.config()?;
            if !fractions.is_empty() {
                cfg.fractions = fractions;
            }
            with_threads(&cfg, || {
                let ds = load_dataset(&cfg)?;
                emit(&cfg, &run_size_sweep_on(&ds, &cfg, &cfg.fractions)?)
            })?;
        }
        Command::Ranges(common) => {
            let cfg = common.config()?;
            let corpus = load_corpus(&cfg)?;
            let ranges = summarize_ranges(&corpus, &load_extractor(&cfg)?)?;
            write_ranges(&cfg.out, &ranges)?;
            for r in &ranges {
                println!("{:<52} {:>12} - {}", r.feature.label(), r.min, r.max);
            }
        }
    }
    Ok(())
}

fn check_labels(saved: &SavedModel, labels: &[String]) -> Result<()> {
    if saved.label_set != labels {
        return Err(Error::Config(format!(
            "model labels {:?} differ from corpus labels {:?}",
            saved.label_set, labels
        )));
    }
    Ok(())
}

fn with_threads<T: Send>(
    cfg: &ExperimentConfig,
    f: impl FnOnce() -> Result<T> + Send,
) -> Result<T> {
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(f),
        None => f(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
