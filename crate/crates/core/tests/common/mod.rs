#![allow(dead_code)]

use std::path::PathBuf;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use readability::corpus::{Corpus, Document, Sentence, Token};
use readability::embeddings::EmbeddingTable;
use readability::Matrix64;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixtures().join(name)).unwrap()
}

const SYLLABLES: &[&str] = &[
    "ba", "co", "di", "em", "gà", "hoa", "kim", "lá", "mẹ", "nước", "ông", "phố", "quê", "rau",
    "sông", "tôi", "uống", "vui", "xe", "yêu", "Nhà", "Đi",
];
const TAGS: &[&str] = &["N", "V", "A", "R", "Cc", "C", "P", "E", "Np", "M"];

/// A random tree over `n` tokens: each token hangs off one placed earlier in
/// a random order.
pub fn random_heads(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);
    let mut heads = vec![0; n];
    for k in 1..n {
        heads[order[k] - 1] = order[rng.random_range(0..k)];
    }
    heads
}

pub fn sentence_from(words: Vec<(String, String)>, heads: &[usize]) -> Sentence {
    let tokens = words
        .into_iter()
        .zip(heads)
        .enumerate()
        .map(|(i, ((surface, pos), &head))| Token {
            id: i + 1,
            surface,
            pos,
            head,
            deprel: if head == 0 {
                "root".into()
            } else {
                "dep".into()
            },
        })
        .collect();
    Sentence::new(tokens).unwrap()
}

pub fn random_word(rng: &mut impl Rng) -> String {
    let n = rng.random_range(1..=3);
    (0..n)
        .map(|_| *SYLLABLES.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join("_")
}

pub fn random_sentence(rng: &mut impl Rng, max_len: usize) -> Sentence {
    let n = rng.random_range(1..=max_len);
    let words = (0..n)
        .map(|_| (random_word(rng), TAGS.choose(rng).unwrap().to_string()))
        .collect();
    sentence_from(words, &random_heads(n, rng))
}

pub fn random_document(id: &str, rng: &mut impl Rng) -> Document {
    let n = rng.random_range(1..=6);
    let sentences = (0..n).map(|_| random_sentence(rng, 25)).collect();
    Document::new(id, sentences, None).unwrap()
}

pub fn random_labeled_corpus(n_docs: usize, k: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<String> = (0..k).map(|c| format!("c{c}")).collect();
    let docs = (0..n_docs)
        .map(|i| {
            let mut d = random_document(&format!("d{i:04}"), &mut rng);
            d.label = Some(labels[i % k].clone());
            d
        })
        .collect();
    Corpus::new("random", labels, docs).unwrap()
}

/// Vocabulary of `size` words with `syllables` syllables each, built from a
/// class-specific pool of 2-letter syllables.
fn class_vocab(class: usize, size: usize, syllables: usize) -> Vec<String> {
    let consonants = [
        "b", "c", "d", "g", "h", "k", "l", "m", "n", "p", "s", "t", "v", "x",
    ];
    let vowels = ["a", "e", "i", "o", "u"];
    (0..size)
        .map(|w| {
            (0..syllables)
                .map(|s| {
                    let i = w * 7 + s * 3 + class * 11;
                    format!(
                        "{}{}",
                        consonants[i % consonants.len()],
                        vowels[(i / 3 + s) % vowels.len()]
                    )
                })
                .collect::<Vec<_>>()
                .join("_")
                + &format!("{class}{w}")
        })
        .collect()
}

pub struct Synthetic {
    pub corpus: Corpus,
    pub borrowed: Vec<String>,
    pub sino: Vec<String>,
}

/// Three classes separated only by word length in syllables and characters.
/// Vocabulary size, POS tags, trees, sentence counts and lexicon membership
/// rates are drawn identically for every class.
pub fn synthetic_corpus(per_class: usize, seed: u64) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<String> = ["short", "middle", "long"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let vocabs: Vec<Vec<String>> = (0..3).map(|c| class_vocab(c, 40, c + 1)).collect();
    let mut borrowed = Vec::new();
    let mut sino = Vec::new();
    for v in &vocabs {
        borrowed.extend(v[..8].iter().cloned());
        sino.extend(v[8..16].iter().cloned());
    }
    let mut docs = Vec::new();
    for i in 0..per_class {
        for (c, vocab) in vocabs.iter().enumerate() {
            let n_sent = rng.random_range(2..=5);
            let sentences = (0..n_sent)
                .map(|_| {
                    let n = rng.random_range(3..=9);
                    let words = (0..n)
                        .map(|_| {
                            (
                                vocab.choose(&mut rng).unwrap().clone(),
                                TAGS.choose(&mut rng).unwrap().to_string(),
                            )
                        })
                        .collect();
                    sentence_from(words, &random_heads(n, &mut rng))
                })
                .collect();
            let id = format!("syn-{}-{i:03}", labels[c]);
            docs.push(Document::new(id, sentences, Some(labels[c].clone())).unwrap());
        }
    }
    Synthetic {
        corpus: Corpus::new("synthetic", labels, docs).unwrap(),
        borrowed,
        sino,
    }
}

/// Standard-normal rows for every document id.
pub fn noise_table(corpus: &Corpus, dim: usize, seed: u64) -> EmbeddingTable<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = EmbeddingTable::new(dim, "noise");
    for d in &corpus.documents {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        table.insert(d.id.clone(), v).unwrap();
    }
    table
}

/// Isotropic unit-variance blobs with class `c` centred at `sep * e_c`.
pub fn blobs(n: usize, d: usize, k: usize, sep: f64, seed: u64) -> (Matrix64, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % k;
        for j in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            data.push(z + if j == c { sep } else { 0.0 });
        }
        y.push(c);
    }
    (Matrix64::from_vec(n, d, data).unwrap(), y)
}

/// Stratified 80/20 index split of `y`.
pub fn split_indices(y: &[usize], k: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for c in 0..k {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == c).collect();
        idx.shuffle(&mut rng);
        let n_test = idx.len() / 5;
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Writes the synthetic corpus, its lexicons and a noise table into `dir`.
pub fn write_synthetic(dir: &std::path::Path) {
    let syn = synthetic_corpus(40, 7);
    std::fs::write(
        dir.join("synthetic.jsonl"),
        readability::corpus::serialize_jsonl(&syn.corpus),
    )
    .unwrap();
    std::fs::write(
        dir.join("synthetic_borrowed.txt"),
        syn.borrowed.join("\n") + "\n",
    )
    .unwrap();
    std::fs::write(dir.join("synthetic_sino.txt"), syn.sino.join("\n") + "\n").unwrap();
    std::fs::write(
        dir.join("synthetic_embeddings.tsv"),
        noise_table(&syn.corpus, 8, 11).to_text(),
    )
    .unwrap();
}

/// Test accuracy of `kind` on 3-class blobs (n=300, d=10, 6 sigma), 80/20
/// split, standardized when the model asks for it. Returns accuracy and
/// fit-plus-predict seconds.
pub fn blob_accuracy(kind: readability::classifiers::ModelKind, seed: u64) -> (f64, f64) {
    use readability::classifiers::{fit, Classifier, TrainParams};
    use readability::embeddings::Standardizer;
    let (x, y) = blobs(300, 10, 3, 6.0, seed);
    let (tr, te) = split_indices(&y, 3, seed);
    let (mut x_tr, mut x_te) = (x.select_rows(&tr), x.select_rows(&te));
    let y_tr: Vec<usize> = tr.iter().map(|&i| y[i]).collect();
    let y_te: Vec<usize> = te.iter().map(|&i| y[i]).collect();
    let start = std::time::Instant::now();
    if kind.wants_standardized() {
        let s = Standardizer::fit(&x_tr).unwrap();
        x_tr = s.apply(&x_tr).unwrap();
        x_te = s.apply(&x_te).unwrap();
    }
    let model = fit(kind, &x_tr, &y_tr, 3, &TrainParams::default(), seed).unwrap();
    let pred = model.predict(&x_te).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let acc = readability::eval::evaluate(&y_te, &pred, 3)
        .unwrap()
        .accuracy;
    (acc, secs)
}

/// Small random dataset with a few duplicate values per column.
pub fn small_dataset(seed: u64) -> (Matrix64, Vec<usize>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(5..40);
    let p = rng.random_range(1..6);
    let k = rng.random_range(2..4);
    let data = (0..n * p)
        .map(|_| (rng.random_range(0..8) as f64) * 0.5)
        .collect();
    let y = (0..n).map(|_| rng.random_range(0..k)).collect();
    (Matrix64::from_vec(n, p, data).unwrap(), y, k)
}

/// Whether a one-tree, no-bootstrap, all-features forest predicts exactly as
/// the single decision tree on train rows and on a fresh grid.
pub fn forest_matches_tree(seed: u64) -> bool {
    use readability::classifiers::{
        fit_forest, fit_tree, Classifier, ForestParams, ForestVariant, TreeParams,
    };
    let (x, y, k) = small_dataset(seed);
    let params = ForestParams {
        n_trees: 1,
        max_features: Some(x.cols()),
        bootstrap: false,
        ..ForestParams::random_forest()
    };
    let forest = fit_forest(&x, &y, k, ForestVariant::RandomForest, &params, seed).unwrap();
    let tree = fit_tree(&x, &y, k, &TreeParams::default(), seed).unwrap();
    let (probe, _, _) = small_dataset(seed ^ 0xdead_beef);
    let probe = if probe.cols() == x.cols() {
        probe
    } else {
        x.clone()
    };
    [&x, &probe]
        .iter()
        .all(|m| forest.predict(m).unwrap() == tree.predict(m).unwrap())
}

/// Largest relative error between analytic and central-difference gradients
/// over `coords` random parameters of a small MLP.
pub fn mlp_gradient_error(seed: u64, coords: usize, h: f64) -> f64 {
    use readability::classifiers::{mlp_loss_and_grad, MlpModel};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (x, y) = blobs(24, 5, 3, 1.0, seed);
    let model = MlpModel::<f64>::init(5, 7, 3, &mut rng);
    let (_, grad) = mlp_loss_and_grad(&model, &x, &y).unwrap();
    let analytic = grad.flatten();
    let base = model.params();
    let picks = rand::seq::index::sample(&mut rng, base.len(), coords);
    let mut worst: f64 = 0.0;
    for i in picks {
        let loss_at = |delta: f64| {
            let mut p = base.clone();
            p[i] += delta;
            let mut m = model.clone();
            m.set_params(&p);
            mlp_loss_and_grad(&m, &x, &y).unwrap().0
        };
        let numeric = (loss_at(h) - loss_at(-h)) / (2.0 * h);
        let a = analytic[i];
        // The floor keeps exactly-zero gradients of inactive units from
        // turning rounding noise into a large ratio.
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(err);
    }
    worst
}

/// Runs the CLI binary and panics with its stderr on failure.
pub fn cli(args: &[&str]) -> String {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_readability"))
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "readability {}: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn cli_fails(args: &[&str]) -> String {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_readability"))
        .args(args)
        .output()
        .unwrap();
    assert!(
        !out.status.success(),
        "readability {} succeeded",
        args.join(" ")
    );
    String::from_utf8(out.stderr).unwrap()
}

/// Path of the checked-in synthetic config as a string.
pub fn synthetic_config_path() -> String {
    fixtures()
        .join("synthetic_config.json")
        .to_string_lossy()
        .into_owned()
}

/// Accuracy and macro-F1 straight from the definitions, without a confusion
/// matrix; 0/0 counts as 0.
pub fn brute_metrics(y: &[usize], p: &[usize], k: usize) -> (f64, f64) {
    let acc = y.iter().zip(p).filter(|(a, b)| a == b).count() as f64 / y.len() as f64;
    let mut f1_sum = 0.0;
    for c in 0..k {
        let tp = y.iter().zip(p).filter(|&(&a, &b)| a == c && b == c).count() as f64;
        let pred = p.iter().filter(|&&b| b == c).count() as f64;
        let actual = y.iter().filter(|&&a| a == c).count() as f64;
        let prec = if pred == 0.0 { 0.0 } else { tp / pred };
        let rec = if actual == 0.0 { 0.0 } else { tp / actual };
        f1_sum += if prec + rec == 0.0 {
            0.0
        } else {
            2.0 * prec * rec / (prec + rec)
        };
    }
    (acc, f1_sum / k as f64)
}
