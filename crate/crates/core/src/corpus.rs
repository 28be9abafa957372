//! Annotated corpora: tokens with POS tags and dependency heads, grouped into
//! sentences and labelled documents.
//!
//! Two interchange formats are read: CoNLL-U (with `# newdoc id = ...`
//! document markers and a separate `doc_id<TAB>label` map) and a JSONL mirror
//! carrying one document per line.

use std::collections::{BTreeSet, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    /// 1-based position within the sentence.
    pub id: usize,
    /// Segmented word; syllables joined by `_`.
    pub surface: String,
    pub pos: String,
    /// Governing token id, 0 for the root.
    pub head: usize,
    pub deprel: String,
}

impl Token {
    /// Lowercased surface used as the word-type identity.
    pub fn normalized(&self) -> String {
        normalize(&self.surface)
    }

    pub fn syllables(&self) -> usize {
        syllable_count(&self.surface)
    }
}

/// Lowercase a surface form; underscores are preserved.
pub fn normalize(surface: &str) -> String {
    surface.to_lowercase()
}

/// Number of syllables in a segmented word: one more than the number of `_`
/// separators.
pub fn syllable_count(surface: &str) -> usize {
    1 + surface.chars().filter(|&c| c == '_').count()
}

pub(crate) fn check_surface(surface: &str) -> std::result::Result<(), String> {
    if surface.is_empty() {
        return Err("empty surface".into());
    }
    if surface.chars().any(char::is_whitespace) {
        return Err(format!("surface {surface:?} contains whitespace"));
    }
    if surface.split('_').any(str::is_empty) {
        return Err(format!("surface {surface:?} has an empty syllable"));
    }
    Ok(())
}

/// A validated dependency-annotated sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Sentence {
    tokens: Vec<Token>,
}

impl Sentence {
    /// Validates ids, heads, the single root and acyclicity.
    pub fn new(tokens: Vec<Token>) -> std::result::Result<Self, String> {
        let n = tokens.len();
        if n == 0 {
            return Err("sentence has no tokens".into());
        }
        let mut roots = 0;
        for (i, t) in tokens.iter().enumerate() {
            if t.id != i + 1 {
                return Err(format!("token id {} at position {}", t.id, i + 1));
            }
            check_surface(&t.surface).map_err(|e| format!("token {}: {e}", t.id))?;
            if t.head > n {
                return Err(format!(
                    "token {} has head {} outside 0..={n}",
                    t.id, t.head
                ));
            }
            if t.head == t.id {
                return Err(format!("token {} is its own head", t.id));
            }
            if t.head == 0 {
                roots += 1;
            }
        }
        if roots != 1 {
            return Err(format!("expected exactly one root, found {roots}"));
        }
        // Every chain must reach the root within n steps.
        for start in 1..=n {
            let mut cur = start;
            let mut steps = 0;
            while cur != 0 {
                cur = tokens[cur - 1].head;
                steps += 1;
                if steps > n {
                    return Err(format!("cycle through token {start}"));
                }
            }
        }
        Ok(Sentence { tokens })
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Id of the root token.
    pub fn root(&self) -> usize {
        self.tokens
            .iter()
            .find(|t| t.head == 0)
            .map(|t| t.id)
            .unwrap()
    }

    pub fn syllables(&self) -> usize {
        self.tokens.iter().map(Token::syllables).sum()
    }
}

impl<'de> Deserialize<'de> for Sentence {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            tokens: Vec<Token>,
        }
        let raw = Raw::deserialize(d)?;
        Sentence::new(raw.tokens).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub sentences: Vec<Sentence>,
    pub label: Option<String>,
}

impl Document {
    pub fn new(
        id: impl Into<String>,
        sentences: Vec<Sentence>,
        label: Option<String>,
    ) -> Result<Self> {
        let id = id.into();
        if sentences.is_empty() {
            return Err(Error::Validation {
                doc: id,
                sentence: 0,
                msg: "document has no sentences".into(),
            });
        }
        Ok(Document {
            id,
            sentences,
            label,
        })
    }

    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.sentences.iter().flat_map(|s| s.tokens.iter())
    }

    pub fn num_tokens(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub name: String,
    /// Ordered label set; class indices refer to positions here.
    pub label_set: Vec<String>,
    pub documents: Vec<Document>,
}

impl Corpus {
    /// Checks id uniqueness and that every label belongs to `label_set`.
    pub fn new(
        name: impl Into<String>,
        label_set: Vec<String>,
        documents: Vec<Document>,
    ) -> Result<Self> {
        let mut seen_labels = HashSet::new();
        for l in &label_set {
            if !seen_labels.insert(l.as_str()) {
                return Err(Error::InvalidInput(format!(
                    "label {l:?} repeated in label set"
                )));
            }
        }
        let mut ids = HashSet::new();
        for d in &documents {
            if !ids.insert(d.id.as_str()) {
                return Err(Error::DuplicateId(d.id.clone()));
            }
            if let Some(l) = &d.label {
                if !seen_labels.contains(l.as_str()) {
                    return Err(Error::UnknownLabel {
                        doc: d.id.clone(),
                        label: l.clone(),
                    });
                }
            }
        }
        Ok(Corpus {
            name: name.into(),
            label_set,
            documents,
        })
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.label_set.iter().position(|l| l == label)
    }

    /// Class index of a document, `None` when unlabeled.
    pub fn class_of(&self, doc: &Document) -> Option<usize> {
        doc.label.as_deref().and_then(|l| self.label_index(l))
    }

    fn with_documents(&self, documents: Vec<Document>) -> Corpus {
        Corpus {
            name: self.name.clone(),
            label_set: self.label_set.clone(),
            documents,
        }
    }

    /// Document indices per class; every document must be labeled.
    fn strata(&self) -> Result<Vec<Vec<usize>>> {
        let mut strata = vec![Vec::new(); self.label_set.len()];
        for (i, d) in self.documents.iter().enumerate() {
            let c = self
                .class_of(d)
                .ok_or_else(|| Error::Unlabeled(d.id.clone()))?;
            strata[c].push(i);
        }
        Ok(strata)
    }
}

/// `doc_id -> label` assignments with an optional declared label order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelMap {
    pub labels: HashMap<String, String>,
    pub declared: Option<Vec<String>>,
}

impl LabelMap {
    /// Parses `doc_id<TAB>label` lines. A `# labels = a, b, c` comment
    /// declares the label order; other `#` lines are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = LabelMap::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some((key, value)) = comment.split_once('=') {
                    if key.trim() == "labels" {
                        let declared: Vec<String> = value
                            .split(',')
                            .map(|s| s.trim().to_string())
                            .filter(|s| !s.is_empty())
                            .collect();
                        map.declared = Some(declared);
                    }
                }
                continue;
            }
            let (id, label) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: no + 1,
                msg: "expected doc_id<TAB>label".into(),
            })?;
            if label.contains('\t') {
                return Err(Error::Parse {
                    line: no + 1,
                    msg: "expected exactly two columns".into(),
                });
            }
            if map
                .labels
                .insert(id.to_string(), label.to_string())
                .is_some()
            {
                return Err(Error::Parse {
                    line: no + 1,
                    msg: format!("document {id} labelled twice"),
                });
            }
        }
        Ok(map)
    }

    /// The declared order, or the sorted distinct labels.
    pub fn label_set(&self) -> Vec<String> {
        match &self.declared {
            Some(d) => d.clone(),
            None => self
                .labels
                .values()
                .cloned()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect(),
        }
    }
}

impl FromIterator<(String, String)> for LabelMap {
    fn from_iter<I: IntoIterator<Item = (String, String)>>(iter: I) -> Self {
        LabelMap {
            labels: iter.into_iter().collect(),
            declared: None,
        }
    }
}

fn validation(doc: &str, sentence: usize, msg: String) -> Error {
    Error::Validation {
        doc: doc.to_string(),
        sentence,
        msg,
    }
}

/// Parses CoNLL-U text. Token fields come from the ID, FORM, UPOS, HEAD and
/// DEPREL columns; multiword ranges and empty nodes are skipped.
pub fn parse_conllu(text: &str, labels: &LabelMap) -> Result<Corpus> {
    struct Pending {
        id: String,
        sentences: Vec<Sentence>,
        rows: Vec<Token>,
    }

    fn flush_sentence(doc: &mut Pending) -> Result<()> {
        if doc.rows.is_empty() {
            return Ok(());
        }
        let idx = doc.sentences.len() + 1;
        let rows = std::mem::take(&mut doc.rows);
        let s = Sentence::new(rows).map_err(|m| validation(&doc.id, idx, m))?;
        doc.sentences.push(s);
        Ok(())
    }

    let mut docs: Vec<Document> = Vec::new();
    let mut cur: Option<Pending> = None;

    let finish = |p: Option<Pending>, docs: &mut Vec<Document>| -> Result<()> {
        if let Some(mut p) = p {
            flush_sentence(&mut p)?;
            let label = labels.labels.get(&p.id).cloned();
            docs.push(Document::new(p.id, p.sentences, label)?);
        }
        Ok(())
    };

    for (no, raw) in text.lines().enumerate() {
        let line_no = no + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            if let Some(p) = cur.as_mut() {
                flush_sentence(p)?;
            }
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == "newdoc id" {
                    finish(cur.take(), &mut docs)?;
                    cur = Some(Pending {
                        id: value.trim().to_string(),
                        sentences: Vec::new(),
                        rows: Vec::new(),
                    });
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected 10 tab-separated columns, found {}", cols.len()),
            });
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let doc = cur.as_mut().ok_or_else(|| Error::Parse {
            line: line_no,
            msg: "token row before any `# newdoc id` marker".into(),
        })?;
        let num = |s: &str, what: &str| {
            s.parse::<usize>().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad {what} {s:?}"),
            })
        };
        doc.rows.push(Token {
            id: num(cols[0], "ID")?,
            surface: cols[1].to_string(),
            pos: cols[3].to_string(),
            head: num(cols[6], "HEAD")?,
            deprel: cols[7].to_string(),
        });
    }
    finish(cur.take(), &mut docs)?;
    Corpus::new("", labels.label_set(), docs)
}

/// Renders a corpus as CoNLL-U; the label map is not included.
pub fn write_conllu(corpus: &Corpus) -> String {
    let mut out = String::new();
    for d in &corpus.documents {
        out.push_str(&format!("# newdoc id = {}\n", d.id));
        for s in &d.sentences {
            for t in s.tokens() {
                out.push_str(&format!(
                    "{}\t{}\t_\t{}\t_\t_\t{}\t{}\t_\t_\n",
                    t.id, t.surface, t.pos, t.head, t.deprel
                ));
            }
            out.push('\n');
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct JsonToken {
    surface: String,
    pos: String,
    head: usize,
    deprel: String,
}

#[derive(Serialize, Deserialize)]
struct JsonDoc {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    sentences: Vec<Vec<JsonToken>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonHeader {
    label_set: Vec<String>,
}

/// Parses JSONL, one document object per line. A leading
/// `{"label_set": [...]}` line declares the label order.
pub fn parse_jsonl(text: &str) -> Result<Corpus> {
    parse_jsonl_with_labels(text, None)
}

/// As [`parse_jsonl`], with an externally declared label set that takes
/// precedence over any header line.
pub fn parse_jsonl_with_labels(text: &str, declared: Option<&[String]>) -> Result<Corpus> {
    let mut label_set: Option<Vec<String>> = declared.map(<[String]>::to_vec);
    let mut docs = Vec::new();
    let mut first = true;
    for (no, raw) in text.lines().enumerate() {
        let line_no = no + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let parse_err = |e: serde_json::Error| Error::Parse {
            line: line_no,
            msg: e.to_string(),
        };
        let value: Value = serde_json::from_str(raw).map_err(parse_err)?;
        if first && value.get("label_set").is_some() && value.get("id").is_none() {
            let header: JsonHeader = serde_json::from_value(value).map_err(parse_err)?;
            if label_set.is_none() {
                label_set = Some(header.label_set);
            }
            first = false;
            continue;
        }
        first = false;
        let jd: JsonDoc = serde_json::from_value(value).map_err(parse_err)?;
        let mut sentences = Vec::with_capacity(jd.sentences.len());
        for (si, s) in jd.sentences.into_iter().enumerate() {
            let tokens = s
                .into_iter()
                .enumerate()
                .map(|(i, t)| Token {
                    id: i + 1,
                    surface: t.surface,
                    pos: t.pos,
                    head: t.head,
                    deprel: t.deprel,
                })
                .collect();
            sentences.push(Sentence::new(tokens).map_err(|m| validation(&jd.id, si + 1, m))?);
        }
        docs.push(Document::new(jd.id, sentences, jd.label)?);
    }
    let label_set = label_set.unwrap_or_else(|| {
        docs.iter()
            .filter_map(|d| d.label.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    });
    Corpus::new("", label_set, docs)
}

/// Writes the JSONL form, including the label-set header line.
pub fn serialize_jsonl(corpus: &Corpus) -> String {
    let mut out = serde_json::to_string(&JsonHeader {
        label_set: corpus.label_set.clone(),
    })
    .unwrap();
    out.push('\n');
    for d in &corpus.documents {
        let jd = JsonDoc {
            id: d.id.clone(),
            label: d.label.clone(),
            sentences: d
                .sentences
                .iter()
                .map(|s| {
                    s.tokens()
                        .iter()
                        .map(|t| JsonToken {
                            surface: t.surface.clone(),
                            pos: t.pos.clone(),
                            head: t.head,
                            deprel: t.deprel.clone(),
                        })
                        .collect()
                })
                .collect(),
        };
        out.push_str(&serde_json::to_string(&jd).unwrap());
        out.push('\n');
    }
    out
}

/// `fraction * n` rounded half up, never below one.
fn stratum_count(fraction: f64, n: usize) -> usize {
    let raw = (fraction * n as f64 + 0.5 + 1e-9).floor() as usize;
    raw.max(1)
}

/// Splits each class so that `round_half_up(test_fraction * n_c)` documents
/// (at least one, and leaving at least one for training) go to the test side.
/// Both sides come back in a seed-shuffled order.
pub fn stratified_split(
    corpus: &Corpus,
    test_fraction: f64,
    seed: u64,
) -> Result<(Corpus, Corpus)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Fraction(test_fraction));
    }
    let strata = corpus.strata()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, mut members) in strata.into_iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 {
            return Err(Error::ClassTooSmall {
                label: corpus.label_set[c].clone(),
                count: members.len(),
                needed: 2,
            });
        }
        members.shuffle(&mut rng);
        let k = stratum_count(test_fraction, members.len()).min(members.len() - 1);
        test.extend_from_slice(&members[..k]);
        train.extend_from_slice(&members[k..]);
    }
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    let pick = |idx: &[usize]| {
        corpus.with_documents(idx.iter().map(|&i| corpus.documents[i].clone()).collect())
    };
    Ok((pick(&train), pick(&test)))
}

/// Stratified subset keeping `round_half_up(fraction * n_c)` documents per
/// class (minimum one). Subsets at one seed are nested across fractions, and
/// documents keep their corpus order.
pub fn subsample(corpus: &Corpus, fraction: f64, seed: u64) -> Result<Corpus> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Fraction(fraction));
    }
    let strata = corpus.strata()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![false; corpus.len()];
    for mut members in strata {
        if members.is_empty() {
            continue;
        }
        members.shuffle(&mut rng);
        let k = stratum_count(fraction, members.len()).min(members.len());
        for &i in &members[..k] {
            keep[i] = true;
        }
    }
    Ok(corpus.with_documents(
        corpus
            .documents
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(d, _)| d.clone())
            .collect(),
    ))
}
