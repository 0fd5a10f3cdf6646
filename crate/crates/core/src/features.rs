//! Tokenization and TF-IDF weighted n-gram features.
//!
//! Weights follow the smoothed convention
//!
//! ```text
//! idf(t)    = ln((1 + N) / (1 + df(t))) + 1
//! weight(t) = tf(t, doc) * idf(t)
//! ```
//!
//! and every document vector is L2-normalized. No stopword removal or
//! lemmatization is applied.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;

use crate::sparse::SparseVector;
use crate::{Error, Result};

pub const TFIDF_FORMAT_VERSION: u32 = 1;

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || is_combining_mark(c)
}

fn is_sentence_end(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '\n' | '।')
}

/// Lowercases, splits on whitespace and strips leading/trailing punctuation.
///
/// ```
/// assert_eq!(kanhope::features::tokenize("ನಮ್ಮ desh!"), ["ನಮ್ಮ", "desh"]);
/// ```
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !is_word_char(c)))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Splits text into sentences at `! ? । newline`, and at `.` when it is
/// followed by whitespace, another terminator or the end of the text.
/// Segments without any word token are dropped.
pub fn sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        let boundary = match c {
            '.' => chars
                .peek()
                .map_or(true, |&(_, next)| next.is_whitespace() || is_sentence_end(next)),
            c => is_sentence_end(c),
        };
        if boundary {
            out.push(&text[start..i]);
            start = i + c.len_utf8();
        }
    }
    out.push(&text[start..]);
    out.retain(|s| s.split_whitespace().any(|t| t.chars().any(is_word_char)));
    out
}

/// All contiguous n-grams for `n` in `n_min..=n_max`, ordered by `n` then
/// position, joined by a single space.
pub fn ngrams(tokens: &[String], n_min: usize, n_max: usize) -> Vec<String> {
    ngrams_joined(tokens, n_min, n_max, " ")
}

fn ngrams_joined(tokens: &[String], n_min: usize, n_max: usize, sep: &str) -> Vec<String> {
    let mut out = Vec::new();
    for n in n_min.max(1)..=n_max {
        if n > tokens.len() {
            break;
        }
        out.extend(tokens.windows(n).map(|w| w.join(sep)));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Analyzer {
    /// Word n-grams over [`tokenize`] output.
    #[default]
    Word,
    /// Character n-grams over the space-joined tokens.
    Char,
}

impl Analyzer {
    /// The unit sequence n-grams are built from.
    pub fn units(self, text: &str) -> Vec<String> {
        let tokens = tokenize(text);
        match self {
            Analyzer::Word => tokens,
            Analyzer::Char => tokens.join(" ").chars().map(String::from).collect(),
        }
    }

    fn separator(self) -> &'static str {
        match self {
            Analyzer::Word => " ",
            Analyzer::Char => "",
        }
    }
}

/// A fitted n-gram vocabulary with document frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TfidfModelRepr", into = "TfidfModelRepr")]
pub struct TfidfModel {
    analyzer: Analyzer,
    n_range: (usize, usize),
    min_df: usize,
    vocab: Vec<String>,
    df: Vec<u32>,
    num_docs: usize,
    index: HashMap<String, u32>,
    idf: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TfidfModelRepr {
    version: u32,
    #[serde(default)]
    analyzer: Analyzer,
    n_range: (usize, usize),
    min_df: usize,
    vocab: Vec<String>,
    df: Vec<u32>,
    num_docs: usize,
}

impl From<TfidfModel> for TfidfModelRepr {
    fn from(m: TfidfModel) -> Self {
        TfidfModelRepr {
            version: TFIDF_FORMAT_VERSION,
            analyzer: m.analyzer,
            n_range: m.n_range,
            min_df: m.min_df,
            vocab: m.vocab,
            df: m.df,
            num_docs: m.num_docs,
        }
    }
}

impl TryFrom<TfidfModelRepr> for TfidfModel {
    type Error = Error;

    fn try_from(r: TfidfModelRepr) -> Result<Self> {
        if r.version != TFIDF_FORMAT_VERSION {
            return Err(Error::Version {
                kind: "tf-idf model",
                found: r.version,
                expected: TFIDF_FORMAT_VERSION,
            });
        }
        if r.vocab.len() != r.df.len() {
            return Err(Error::InvalidArgument("vocab and df lengths differ".into()));
        }
        if r.df.iter().any(|&d| d == 0 || d as usize > r.num_docs) {
            return Err(Error::InvalidArgument("document frequency out of range".into()));
        }
        Ok(TfidfModel::assemble(
            r.analyzer, r.n_range, r.min_df, r.vocab, r.df, r.num_docs,
        ))
    }
}

impl TfidfModel {
    fn assemble(
        analyzer: Analyzer,
        n_range: (usize, usize),
        min_df: usize,
        vocab: Vec<String>,
        df: Vec<u32>,
        num_docs: usize,
    ) -> Self {
        let index = vocab
            .iter()
            .enumerate()
            .map(|(i, g)| (g.clone(), i as u32))
            .collect();
        let n = num_docs as f64;
        let idf = df
            .iter()
            .map(|&d| ((1.0 + n) / (1.0 + f64::from(d))).ln() + 1.0)
            .collect();
        TfidfModel {
            analyzer,
            n_range,
            min_df,
            vocab,
            df,
            num_docs,
            index,
            idf,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocab
    }

    pub fn feature_index(&self, gram: &str) -> Option<u32> {
        self.index.get(gram).copied()
    }

    pub fn doc_freq(&self) -> &[u32] {
        &self.df
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn num_docs(&self) -> usize {
        self.num_docs
    }

    pub fn n_range(&self) -> (usize, usize) {
        self.n_range
    }

    pub fn analyzer(&self) -> Analyzer {
        self.analyzer
    }

    /// TF-IDF vector of a unit sequence (tokens for the word analyzer).
    pub fn transform(&self, units: &[String]) -> SparseVector {
        let (lo, hi) = self.n_range;
        let mut tf: BTreeMap<u32, f64> = BTreeMap::new();
        for gram in ngrams_joined(units, lo, hi, self.analyzer.separator()) {
            if let Some(&j) = self.index.get(&gram) {
                *tf.entry(j).or_insert(0.0) += 1.0;
            }
        }
        let mut entries: Vec<(u32, f64)> = tf
            .into_iter()
            .map(|(j, count)| (j, count * self.idf[j as usize]))
            .collect();
        let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            entries.iter_mut().for_each(|(_, w)| *w /= norm);
        }
        SparseVector::from_pairs(entries).expect("tf-idf weights are finite")
    }

    /// Tokenizes `text` with the model's analyzer and transforms it.
    pub fn transform_text(&self, text: &str) -> SparseVector {
        self.transform(&self.analyzer.units(text))
    }

    /// Transforms many texts in parallel; output order matches input order.
    pub fn transform_texts<S: AsRef<str> + Sync>(&self, texts: &[S]) -> Vec<SparseVector> {
        texts
            .par_iter()
            .map(|t| self.transform_text(t.as_ref()))
            .collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_slice(&bytes)?)
    }
}

/// Fits a vocabulary of word n-grams over tokenized documents.
///
/// Features are the n-grams with document frequency `>= min_df`, indexed in
/// sorted order.
pub fn fit_tfidf(docs: &[Vec<String>], n_range: (usize, usize), min_df: usize) -> Result<TfidfModel> {
    fit_tfidf_with(docs, n_range, min_df, Analyzer::Word)
}

/// Like [`fit_tfidf`], with the unit sequences produced by `analyzer`.
pub fn fit_tfidf_with(
    docs: &[Vec<String>],
    n_range: (usize, usize),
    min_df: usize,
    analyzer: Analyzer,
) -> Result<TfidfModel> {
    let (lo, hi) = n_range;
    if lo == 0 || lo > hi {
        return Err(Error::InvalidArgument(format!("n-gram range {lo}..={hi}")));
    }
    if docs.is_empty() {
        return Err(Error::InvalidArgument("cannot fit tf-idf on zero documents".into()));
    }
    let mut df: HashMap<String, u32> = HashMap::new();
    for doc in docs {
        let grams: HashSet<String> = ngrams_joined(doc, lo, hi, analyzer.separator())
            .into_iter()
            .collect();
        for g in grams {
            *df.entry(g).or_insert(0) += 1;
        }
    }
    let mut kept: Vec<(String, u32)> = df
        .into_iter()
        .filter(|&(_, d)| d as usize >= min_df)
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary { min_df });
    }
    kept.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    let (vocab, df): (Vec<String>, Vec<u32>) = kept.into_iter().unzip();
    Ok(TfidfModel::assemble(analyzer, n_range, min_df, vocab, df, docs.len()))
}

/// Tokenizes texts with `analyzer` and fits a model on them.
pub fn fit_texts<S: AsRef<str>>(
    texts: &[S],
    n_range: (usize, usize),
    min_df: usize,
    analyzer: Analyzer,
) -> Result<TfidfModel> {
    let docs: Vec<Vec<String>> = texts.iter().map(|t| analyzer.units(t.as_ref())).collect();
    fit_tfidf_with(&docs, n_range, min_df, analyzer)
}
