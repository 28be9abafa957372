//! The fourteen statistical readability features, organised in five groups.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{check_surface, normalize, Corpus, Document, Sentence};
use crate::error::{Error, Result};
use crate::num::Float;

/// Sentences with strictly more syllables than this count as long.
pub const LONG_SENTENCE_SYLLABLES: usize = 20;

pub const NUM_FEATURES: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    NumWords,
    AvgWordLenChars,
    LongSentenceRatio,
    DistinctCommonNounsRatio,
    DistinctParallelConjRatio,
    SinglePosTagRatio,
    AdverbsPerSentence,
    DistinctConjunctionCount,
    ConjunctionCount,
    BorrowedRatio,
    DistinctBorrowedRatio,
    DistinctSinoRatio,
    MeanDependencyDepth,
    MeanSentenceOverlap,
}

impl Feature {
    pub const ALL: [Feature; NUM_FEATURES] = [
        Feature::NumWords,
        Feature::AvgWordLenChars,
        Feature::LongSentenceRatio,
        Feature::DistinctCommonNounsRatio,
        Feature::DistinctParallelConjRatio,
        Feature::SinglePosTagRatio,
        Feature::AdverbsPerSentence,
        Feature::DistinctConjunctionCount,
        Feature::ConjunctionCount,
        Feature::BorrowedRatio,
        Feature::DistinctBorrowedRatio,
        Feature::DistinctSinoRatio,
        Feature::MeanDependencyDepth,
        Feature::MeanSentenceOverlap,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Column name used in CSV output.
    pub fn name(self) -> &'static str {
        match self {
            Feature::NumWords => "num_words",
            Feature::AvgWordLenChars => "avg_word_len_chars",
            Feature::LongSentenceRatio => "long_sentence_ratio",
            Feature::DistinctCommonNounsRatio => "distinct_common_nouns_ratio",
            Feature::DistinctParallelConjRatio => "distinct_parallel_conj_ratio",
            Feature::SinglePosTagRatio => "single_pos_tag_ratio",
            Feature::AdverbsPerSentence => "adverbs_per_sentence",
            Feature::DistinctConjunctionCount => "distinct_conjunction_count",
            Feature::ConjunctionCount => "conjunction_count",
            Feature::BorrowedRatio => "borrowed_ratio",
            Feature::DistinctBorrowedRatio => "distinct_borrowed_ratio",
            Feature::DistinctSinoRatio => "distinct_sino_ratio",
            Feature::MeanDependencyDepth => "mean_dependency_depth",
            Feature::MeanSentenceOverlap => "mean_sentence_overlap",
        }
    }

    /// Human-readable row label for range reports.
    pub fn label(self) -> &'static str {
        match self {
            Feature::NumWords => "Number of words",
            Feature::AvgWordLenChars => "Average word length in characters",
            Feature::LongSentenceRatio => "Ratio of long sentences (syllables)",
            Feature::DistinctCommonNounsRatio => "Distinct common nouns / distinct words",
            Feature::DistinctParallelConjRatio => {
                "Distinct coordinating conjunctions / distinct words"
            }
            Feature::SinglePosTagRatio => "Ratio of single-POS-tag words",
            Feature::AdverbsPerSentence => "Adverbs / sentences",
            Feature::DistinctConjunctionCount => "Distinct conjunction words",
            Feature::ConjunctionCount => "Conjunction words",
            Feature::BorrowedRatio => "Ratio of borrowed words",
            Feature::DistinctBorrowedRatio => "Ratio of distinct borrowed words",
            Feature::DistinctSinoRatio => "Ratio of distinct Sino-Vietnamese words",
            Feature::MeanDependencyDepth => "Dependency tree depth",
            Feature::MeanSentenceOverlap => "Mean overlap between sentences",
        }
    }

    pub fn group(self) -> FeatureGroup {
        match self.index() {
            0..=2 => FeatureGroup::Raw,
            3..=6 => FeatureGroup::Pos,
            7..=8 => FeatureGroup::Syntax,
            9..=11 => FeatureGroup::VietSpec,
            _ => FeatureGroup::WordCohesion,
        }
    }

    /// Whether the value is a proportion bounded by [0, 1].
    pub fn is_ratio(self) -> bool {
        matches!(
            self,
            Feature::LongSentenceRatio
                | Feature::DistinctCommonNounsRatio
                | Feature::DistinctParallelConjRatio
                | Feature::SinglePosTagRatio
                | Feature::BorrowedRatio
                | Feature::DistinctBorrowedRatio
                | Feature::DistinctSinoRatio
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureGroup {
    Raw,
    Pos,
    Syntax,
    VietSpec,
    WordCohesion,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 5] = [
        FeatureGroup::Raw,
        FeatureGroup::Pos,
        FeatureGroup::Syntax,
        FeatureGroup::VietSpec,
        FeatureGroup::WordCohesion,
    ];

    /// Feature indices belonging to the group, ascending.
    pub fn indices(self) -> std::ops::Range<usize> {
        match self {
            FeatureGroup::Raw => 0..3,
            FeatureGroup::Pos => 3..7,
            FeatureGroup::Syntax => 7..9,
            FeatureGroup::VietSpec => 9..12,
            FeatureGroup::WordCohesion => 12..14,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureGroup::Raw => "raw",
            FeatureGroup::Pos => "pos",
            FeatureGroup::Syntax => "syntax",
            FeatureGroup::VietSpec => "viet_spec",
            FeatureGroup::WordCohesion => "word_cohesion",
        }
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureGroup::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown feature group {s:?}")))
    }
}

/// The fourteen feature values in [`Feature::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Float")]
pub struct FeatureVector<F>(pub [F; NUM_FEATURES]);

impl<F: Float> FeatureVector<F> {
    pub fn get(&self, f: Feature) -> F {
        self.0[f.index()]
    }

    pub fn as_slice(&self) -> &[F] {
        &self.0
    }

    pub fn group(&self, g: FeatureGroup) -> &[F] {
        &self.0[g.indices()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LexiconKind {
    Borrowed,
    SinoVietnamese,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    pub kind: LexiconKind,
    entries: HashSet<String>,
}

impl Lexicon {
    /// A lexicon with no entries; every lookup misses.
    pub fn empty(kind: LexiconKind) -> Self {
        Lexicon {
            kind,
            entries: HashSet::new(),
        }
    }

    pub fn from_entries<I, S>(kind: LexiconKind, entries: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Lexicon {
            kind,
            entries: entries.into_iter().map(|s| normalize(s.as_ref())).collect(),
        }
    }

    pub fn contains(&self, normalized: &str) -> bool {
        self.entries.contains(normalized)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One entry per line, `#` comments. Entries are lowercased and deduplicated.
pub fn load_lexicon(text: &str, kind: LexiconKind) -> Result<Lexicon> {
    let mut entries = HashSet::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        check_surface(line).map_err(|msg| Error::Parse { line: no + 1, msg })?;
        entries.insert(normalize(line));
    }
    if entries.is_empty() {
        return Err(Error::Lexicon(format!("{kind:?} lexicon has no entries")));
    }
    Ok(Lexicon { kind, entries })
}

/// Which POS tags play the roles the features look for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagMap {
    pub common_noun: BTreeSet<String>,
    pub coord_conj: BTreeSet<String>,
    pub subord_conj: BTreeSet<String>,
    pub adverb: BTreeSet<String>,
}

impl Default for TagMap {
    /// VnCoreNLP tagset.
    fn default() -> Self {
        let one = |t: &str| BTreeSet::from([t.to_string()]);
        TagMap {
            common_noun: one("N"),
            coord_conj: one("Cc"),
            subord_conj: one("C"),
            adverb: one("R"),
        }
    }
}

impl TagMap {
    /// Parses `role=TAG[,TAG...]` lines; unmentioned roles keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = TagMap::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: no + 1,
                msg: "expected role=TAG".into(),
            })?;
            let tags: BTreeSet<String> = value
                .split(',')
                .map(|t| t.trim().to_string())
                .filter(|t| !t.is_empty())
                .collect();
            if tags.is_empty() {
                return Err(Error::Parse {
                    line: no + 1,
                    msg: format!("no tags for role {}", key.trim()),
                });
            }
            let slot = match key.trim() {
                "common_noun" => &mut map.common_noun,
                "coord_conj" => &mut map.coord_conj,
                "subord_conj" => &mut map.subord_conj,
                "adverb" => &mut map.adverb,
                other => {
                    return Err(Error::Parse {
                        line: no + 1,
                        msg: format!("unknown role {other:?}"),
                    })
                }
            };
            *slot = tags;
        }
        Ok(map)
    }

    pub fn is_conjunction(&self, pos: &str) -> bool {
        self.coord_conj.contains(pos) || self.subord_conj.contains(pos)
    }
}

/// Normalized word type -> set of POS tags it appears with.
fn type_tags(doc: &Document) -> BTreeMap<String, BTreeSet<&str>> {
    let mut map: BTreeMap<String, BTreeSet<&str>> = BTreeMap::new();
    for t in doc.tokens() {
        map.entry(t.normalized())
            .or_default()
            .insert(t.pos.as_str());
    }
    map
}

fn ratio<F: Float>(num: usize, den: usize) -> F {
    if den == 0 {
        F::zero()
    } else {
        F::from_count(num) / F::from_count(den)
    }
}

/// `(num_words, avg_word_len_chars, long_sentence_ratio)`.
pub fn raw_features<F: Float>(doc: &Document) -> (F, F, F) {
    let words = doc.num_tokens();
    let chars: usize = doc
        .tokens()
        .map(|t| t.surface.chars().filter(|&c| c != '_').count())
        .sum();
    let long = doc
        .sentences
        .iter()
        .filter(|s| s.syllables() > LONG_SENTENCE_SYLLABLES)
        .count();
    (
        F::from_count(words),
        ratio(chars, words),
        ratio(long, doc.sentences.len()),
    )
}

/// `(distinct_common_nouns_ratio, distinct_parallel_conj_ratio,
/// single_pos_tag_ratio, adverbs_per_sentence)`.
pub fn pos_features<F: Float>(doc: &Document, tags: &TagMap) -> (F, F, F, F) {
    let types = type_tags(doc);
    let with_tag = |set: &BTreeSet<String>| {
        types
            .values()
            .filter(|ts| ts.iter().any(|t| set.contains(*t)))
            .count()
    };
    let nouns = with_tag(&tags.common_noun);
    let coord = with_tag(&tags.coord_conj);
    let single = types.values().filter(|ts| ts.len() == 1).count();
    let adverbs = doc
        .tokens()
        .filter(|t| tags.adverb.contains(&t.pos))
        .count();
    (
        ratio(nouns, types.len()),
        ratio(coord, types.len()),
        ratio(single, types.len()),
        ratio(adverbs, doc.sentences.len()),
    )
}

/// `(distinct_conjunction_count, conjunction_count)` as document totals.
pub fn syntax_features<F: Float>(doc: &Document, tags: &TagMap) -> (F, F) {
    let mut distinct = HashSet::new();
    let mut total = 0;
    for t in doc.tokens().filter(|t| tags.is_conjunction(&t.pos)) {
        distinct.insert(t.normalized());
        total += 1;
    }
    (F::from_count(distinct.len()), F::from_count(total))
}

/// `(borrowed_ratio, distinct_borrowed_ratio, distinct_sino_ratio)`.
pub fn vnspec_features<F: Float>(
    doc: &Document,
    borrowed: &Lexicon,
    sino: &Lexicon,
) -> Result<(F, F, F)> {
    if borrowed.kind != LexiconKind::Borrowed {
        return Err(Error::Lexicon(format!(
            "expected a borrowed-word lexicon, got {:?}",
            borrowed.kind
        )));
    }
    if sino.kind != LexiconKind::SinoVietnamese {
        return Err(Error::Lexicon(format!(
            "expected a Sino-Vietnamese lexicon, got {:?}",
            sino.kind
        )));
    }
    let mut tokens = 0;
    let mut borrowed_tokens = 0;
    let mut types = HashSet::new();
    for t in doc.tokens() {
        let norm = t.normalized();
        tokens += 1;
        if borrowed.contains(&norm) {
            borrowed_tokens += 1;
        }
        types.insert(norm);
    }
    let borrowed_types = types.iter().filter(|t| borrowed.contains(t)).count();
    let sino_types = types.iter().filter(|t| sino.contains(t)).count();
    Ok((
        ratio(borrowed_tokens, tokens),
        ratio(borrowed_types, types.len()),
        ratio(sino_types, types.len()),
    ))
}

/// Nodes on the longest root-to-leaf path; a lone root has depth 1.
pub fn dependency_depth(sentence: &Sentence) -> usize {
    let tokens = sentence.tokens();
    let mut depth = vec![0usize; tokens.len() + 1];
    fn resolve(i: usize, tokens: &[crate::corpus::Token], depth: &mut [usize]) -> usize {
        if i == 0 {
            return 0;
        }
        if depth[i] == 0 {
            // Walk up iteratively; sentences are acyclic by construction.
            let mut path = vec![i];
            let mut cur = tokens[i - 1].head;
            while cur != 0 && depth[cur] == 0 {
                path.push(cur);
                cur = tokens[cur - 1].head;
            }
            let mut d = if cur == 0 { 0 } else { depth[cur] };
            for &node in path.iter().rev() {
                d += 1;
                depth[node] = d;
            }
        }
        depth[i]
    }
    (1..=tokens.len())
        .map(|i| resolve(i, tokens, &mut depth))
        .max()
        .unwrap_or(0)
}

/// Mean count of shared word types over all unordered sentence pairs; zero
/// for single-sentence documents.
pub fn sentence_overlap<F: Float>(doc: &Document) -> F {
    let sets: Vec<HashSet<String>> = doc
        .sentences
        .iter()
        .map(|s| s.tokens().iter().map(|t| t.normalized()).collect())
        .collect();
    let mut shared = 0usize;
    let mut pairs = 0usize;
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            shared += sets[i].intersection(&sets[j]).count();
            pairs += 1;
        }
    }
    ratio(shared, pairs)
}

pub fn mean_dependency_depth<F: Float>(doc: &Document) -> F {
    let total: usize = doc.sentences.iter().map(dependency_depth).sum();
    ratio(total, doc.sentences.len())
}

/// Everything the extractor needs besides the document.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    pub borrowed: Lexicon,
    pub sino: Lexicon,
    pub tags: TagMap,
}

impl FeatureExtractor {
    pub fn new(borrowed: Lexicon, sino: Lexicon, tags: TagMap) -> Result<Self> {
        if borrowed.kind != LexiconKind::Borrowed || sino.kind != LexiconKind::SinoVietnamese {
            return Err(Error::Lexicon(
                "lexicon kinds do not match their roles".into(),
            ));
        }
        Ok(FeatureExtractor {
            borrowed,
            sino,
            tags,
        })
    }

    pub fn extract<F: Float>(&self, doc: &Document) -> Result<FeatureVector<F>> {
        extract_features(doc, &self.borrowed, &self.sino, &self.tags)
    }

    /// Extracts every document of the corpus, in corpus order.
    pub fn extract_corpus<F: Float>(&self, corpus: &Corpus) -> Result<Vec<FeatureVector<F>>> {
        use rayon::prelude::*;
        corpus
            .documents
            .par_iter()
            .map(|d| self.extract(d))
            .collect()
    }
}

pub fn extract_features<F: Float>(
    doc: &Document,
    borrowed: &Lexicon,
    sino: &Lexicon,
    tags: &TagMap,
) -> Result<FeatureVector<F>> {
    let (words, len, long) = raw_features(doc);
    let (nouns, coord, single, adverbs) = pos_features(doc, tags);
    let (distinct_conj, conj) = syntax_features(doc, tags);
    let (b, db, ds) = vnspec_features(doc, borrowed, sino)?;
    Ok(FeatureVector([
        words,
        len,
        long,
        nouns,
        coord,
        single,
        adverbs,
        distinct_conj,
        conj,
        b,
        db,
        ds,
        mean_dependency_depth(doc),
        sentence_overlap(doc),
    ]))
}

/// CSV with header `doc_id,label,<feature names>`.
pub fn write_features_csv<W: Write, F: Float>(
    out: W,
    corpus: &Corpus,
    vectors: &[FeatureVector<F>],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["doc_id".to_string(), "label".to_string()];
    header.extend(Feature::ALL.iter().map(|f| f.name().to_string()));
    w.write_record(&header)?;
    for (doc, v) in corpus.documents.iter().zip(vectors) {
        let mut rec = vec![doc.id.clone(), doc.label.clone().unwrap_or_default()];
        rec.extend(v.0.iter().map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
