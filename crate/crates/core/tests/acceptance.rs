//! Acceptance suite. Runs every gating criterion at its stated tolerance and
//! prints one PASS/FAIL line each; exits non-zero if any fails.
//!
//! Setting `READABILITY_ACCEPTANCE_CONFIG` to an experiment config for a real
//! labelled corpus adds a non-gating report of statistical-mode Random Forest
//! accuracy on it.

mod common;

use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use readability::classifiers::ModelKind;
use readability::corpus::{
    parse_conllu, parse_jsonl, stratified_split, subsample, Corpus, LabelMap,
};
use readability::eval::evaluate;
use readability::features::{
    load_lexicon, Feature, FeatureExtractor, Lexicon, LexiconKind, TagMap,
};
use readability::harness::derive_seed;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn feature_oracle() -> Outcome {
    let labels = LabelMap::parse(&common::read_fixture("fixture_labels.tsv")).unwrap();
    let corpus = parse_conllu(&common::read_fixture("fixture.conllu"), &labels)
        .map_err(|e| e.to_string())?;
    let ex = FeatureExtractor::new(
        load_lexicon(&common::read_fixture("borrowed.txt"), LexiconKind::Borrowed).unwrap(),
        load_lexicon(
            &common::read_fixture("sino.txt"),
            LexiconKind::SinoVietnamese,
        )
        .unwrap(),
        TagMap::parse(&common::read_fixture("tagmap.txt")).unwrap(),
    )
    .unwrap();
    let mut r = csv::Reader::from_path(common::fixtures().join("fixture_expected.csv")).unwrap();
    let mut worst: f64 = 0.0;
    let mut docs = 0;
    for rec in r.records() {
        let rec = rec.unwrap();
        let doc = corpus
            .documents
            .iter()
            .find(|d| d.id == rec[0])
            .ok_or_else(|| format!("{} missing from corpus", &rec[0]))?;
        let got = ex.extract::<f64>(doc).map_err(|e| e.to_string())?;
        for (g, w) in got.0.iter().zip(rec.iter().skip(2)) {
            worst = worst.max((g - w.parse::<f64>().unwrap()).abs());
        }
        docs += 1;
    }
    check(
        docs == corpus.len() && docs >= 10 && worst <= 1e-9,
        format!("{docs} documents x 14 features, max abs diff {worst:.1e} (tol 1e-9)"),
    )
}

fn range_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let docs: Vec<_> = (0..1000)
        .map(|i| common::random_document(&format!("r{i}"), &mut rng))
        .collect();
    let ex = FeatureExtractor::new(
        Lexicon::from_entries(LexiconKind::Borrowed, ["ba", "xe", "co_di", "hoa_lá"]),
        Lexicon::from_entries(LexiconKind::SinoVietnamese, ["quê", "tôi", "nước"]),
        TagMap::default(),
    )
    .unwrap();
    let start = Instant::now();
    let mut bad = Vec::new();
    for d in &docs {
        let v = ex.extract::<f64>(d).map_err(|e| e.to_string())?;
        for f in Feature::ALL {
            let x = v.get(f);
            let ok = x.is_finite()
                && (!f.is_ratio() || (0.0..=1.0).contains(&x))
                && (f != Feature::MeanDependencyDepth || x >= 1.0);
            if !ok {
                bad.push(format!("{} {}={x}", d.id, f.name()));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        bad.is_empty() && secs < 5.0,
        format!(
            "1000 documents, {} violations, {secs:.2}s (limit 5s) {}",
            bad.len(),
            bad.first().map_or("", String::as_str)
        ),
    )
}

fn metric_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let k = rng.random_range(1..=5);
        let n = rng.random_range(1..80);
        let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let p: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let r = evaluate(&y, &p, k).map_err(|e| e.to_string())?;
        let (acc, f1) = common::brute_metrics(&y, &p, k);
        worst = worst
            .max((r.accuracy - acc).abs())
            .max((r.macro_f1 - f1).abs());
    }
    let hand = evaluate(&[0, 0, 1, 1], &[0, 1, 1, 1], 2).unwrap();
    let hand_ok = (hand.accuracy - 0.75).abs() <= 1e-9 && (hand.macro_f1 - 0.73333).abs() <= 1e-5;
    let hand_exact = (hand.macro_f1 - 11.0 / 15.0).abs() <= 1e-9;
    check(
        worst <= 1e-12 && hand_ok && hand_exact,
        format!(
            "1000 cases max diff {worst:.1e} (tol 1e-12); [[1,1],[0,2]] acc {} macro-F1 {:.6}",
            hand.accuracy, hand.macro_f1
        ),
    )
}

fn classifier_sanity() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for kind in [
        ModelKind::RandomForest,
        ModelKind::ExtraTrees,
        ModelKind::LinearSvm,
        ModelKind::Mlp,
    ] {
        let (acc, secs) = common::blob_accuracy(kind, 17);
        ok &= acc >= 0.95 && secs < 10.0;
        parts.push(format!("{} {:.1}% {secs:.2}s", kind.name(), acc * 100.0));
    }
    check(
        ok,
        format!("blobs n=300 d=10: {} (need >=95%, <10s)", parts.join(", ")),
    )
}

fn tree_degeneracy() -> Outcome {
    let failed: Vec<u64> = (0..50)
        .filter(|&s| !common::forest_matches_tree(1000 + s))
        .collect();
    check(
        failed.is_empty(),
        format!("50 datasets, {} mismatches {failed:?}", failed.len()),
    )
}

fn mlp_gradient_check() -> Outcome {
    let err = common::mlp_gradient_error(31, 20, 1e-5);
    check(
        err < 1e-4,
        format!("20 coordinates, max relative error {err:.2e} (tol 1e-4)"),
    )
}

fn run(args: &[&str], out: &Path, threads: usize) -> Vec<u8> {
    let cfg = common::synthetic_config_path();
    let t = threads.to_string();
    let mut full = args.to_vec();
    full.extend([
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--threads",
        &t,
    ]);
    common::cli(&full);
    fs::read(out.join("results.csv")).unwrap()
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let commands: [&[&str]; 3] = [
        &[
            "train",
            "--mode",
            "statistical,semantic,joint",
            "--model",
            "random_forest,extra_trees,svm,mlp",
        ],
        &["ablate"],
        &["sweep"],
    ];
    let mut diffs = Vec::new();
    for (i, cmd) in commands.iter().enumerate() {
        let runs: Vec<Vec<u8>> = [1, 1, 4]
            .iter()
            .enumerate()
            .map(|(j, &t)| run(cmd, &dir.path().join(format!("{i}-{j}")), t))
            .collect();
        if runs[0] != runs[1] {
            diffs.push(format!("{} repeat", cmd[0]));
        }
        if runs[0] != runs[2] {
            diffs.push(format!("{} threads", cmd[0]));
        }
    }
    check(
        diffs.is_empty(),
        format!("train/ablate/sweep twice at 1 thread and once at 4: differing {diffs:?}"),
    )
}

fn rows(out: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(out.join("results.csv")).unwrap();
    r.records()
        .map(|x| x.unwrap().iter().map(String::from).collect())
        .collect()
}

fn protocol_shape() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::synthetic_config_path();
    let out = |name: &str| dir.path().join(name);
    let models = 3;
    let mut problems = Vec::new();

    common::cli(&[
        "ablate",
        "--config",
        &cfg,
        "--out",
        out("ablate").to_str().unwrap(),
    ]);
    let ablate = rows(&out("ablate"));
    if ablate.len() != 5 * models {
        problems.push(format!("ablate rows {}", ablate.len()));
    }
    for scope in ["joint", "statistical"] {
        let dest = out(&format!("ablate-{scope}"));
        common::cli(&[
            "ablate",
            "--config",
            &cfg,
            "--ablation-scope",
            scope,
            "--out",
            dest.to_str().unwrap(),
        ]);
        let r = rows(&dest);
        for m in 0..models {
            let acc = |g: usize| r[g * models + m][4].parse::<f64>().unwrap();
            let f1 = |g: usize| r[g * models + m][5].parse::<f64>().unwrap();
            if !(1..5).all(|g| acc(0) > acc(g) && f1(0) > f1(g)) {
                problems.push(format!("raw does not dominate for {} ({scope})", r[m][2]));
            }
        }
    }

    common::cli(&[
        "sweep",
        "--config",
        &cfg,
        "--out",
        out("sweep").to_str().unwrap(),
    ]);
    let sweep = rows(&out("sweep"));
    if sweep.len() != 3 * models {
        problems.push(format!("sweep rows {}", sweep.len()));
    }
    let corpus: Corpus = parse_jsonl(&common::read_fixture("synthetic.jsonl")).unwrap();
    let (train, _) = stratified_split(&corpus, 0.2, 1).unwrap();
    let sub_seed = derive_seed(1, "subsample");
    let ids = |f| -> HashSet<String> {
        subsample(&train, f, sub_seed)
            .unwrap()
            .documents
            .into_iter()
            .map(|d| d.id)
            .collect()
    };
    if !(ids(0.25).is_subset(&ids(0.5)) && ids(0.5).is_subset(&ids(0.75))) {
        problems.push("sweep subsets not nested".into());
    }

    common::cli(&[
        "ranges",
        "--config",
        &cfg,
        "--out",
        out("ranges").to_str().unwrap(),
    ]);
    let ranges: Vec<String> = fs::read_to_string(out("ranges").join("ranges.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().to_string())
        .collect();
    let names: Vec<String> = Feature::ALL.iter().map(|f| f.name().to_string()).collect();
    if ranges != names {
        problems.push("ranges rows not in feature-table order".into());
    }

    common::cli(&[
        "train",
        "--config",
        &cfg,
        "--out",
        out("train").to_str().unwrap(),
    ]);
    let train_rows = rows(&out("train"));
    if train_rows.len() != models || train_rows.iter().any(|r| r[1] != "statistical") {
        problems.push(format!("train rows {}", train_rows.len()));
    }

    check(
        problems.is_empty(),
        format!(
            "ablate {} rows, sweep {} nested rows, ranges {} rows, train {} rows; raw dominates: {}; {problems:?}",
            ablate.len(),
            sweep.len(),
            ranges.len(),
            train_rows.len(),
            !problems.iter().any(|p| p.contains("dominate"))
        ),
    )
}

/// Not gating: reports Random Forest accuracy on a user-supplied corpus.
fn user_corpus_report() -> Option<String> {
    let cfg = std::env::var("READABILITY_ACCEPTANCE_CONFIG").ok()?;
    let dir = tempfile::tempdir().unwrap();
    common::cli(&[
        "train",
        "--config",
        &cfg,
        "--mode",
        "statistical",
        "--model",
        "random_forest",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let r = &rows(dir.path())[0];
    Some(format!(
        "statistical random_forest acc {} macro-F1 {}",
        r[4], r[5]
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("feature oracle", feature_oracle),
        ("range invariants", range_invariants),
        ("metric oracle", metric_oracle),
        ("classifier sanity", classifier_sanity),
        ("tree degeneracy", tree_degeneracy),
        ("mlp gradient check", mlp_gradient_check),
        ("determinism", determinism),
        ("protocol shape", protocol_shape),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS  {name:<20} {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name:<20} {detail}");
            }
        }
    }
    match user_corpus_report() {
        Some(line) => println!("INFO  {:<20} {line}", "user corpus"),
        None => println!(
            "SKIP  {:<20} set READABILITY_ACCEPTANCE_CONFIG to run",
            "user corpus"
        ),
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
