//! Dataset loading, label filtering, splitting and corpus statistics.
//!
//! Datasets are stored as UTF-8 CSV with a header row and the columns
//! `text`, `label` and an optional `translation` (English channel input).
//! Extra columns are ignored. Comments receive ids `0..n` in file order.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features;
use crate::hashing::derive_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    NotHope,
    Hope,
    NotKannada,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::NotHope, Label::Hope, Label::NotKannada];

    /// Class names of the binary task, indexed by [`Label::class_index`].
    pub const CLASS_NAMES: [&'static str; 2] = ["Not-Hope", "Hope"];

    /// Canonical spelling used when writing datasets.
    pub fn as_str(self) -> &'static str {
        match self {
            Label::NotHope => "Not-Hope",
            Label::Hope => "Hope",
            Label::NotKannada => "Not-Kannada",
        }
    }

    /// Index in the binary classification task (`Not-Hope` = 0, `Hope` = 1).
    /// `NotKannada` has no class index.
    pub fn class_index(self) -> Option<usize> {
        match self {
            Label::NotHope => Some(0),
            Label::Hope => Some(1),
            Label::NotKannada => None,
        }
    }

    pub fn from_class_index(index: usize) -> Option<Label> {
        match index {
            0 => Some(Label::NotHope),
            1 => Some(Label::Hope),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Maps label strings found in data files to [`Label`]s.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    map: HashMap<String, Label>,
}

impl Default for LabelMap {
    fn default() -> Self {
        let map = Label::ALL
            .iter()
            .map(|&l| (l.as_str().to_string(), l))
            .collect();
        LabelMap { map }
    }
}

impl LabelMap {
    pub fn empty() -> Self {
        LabelMap {
            map: HashMap::new(),
        }
    }

    pub fn insert(&mut self, spelling: impl Into<String>, label: Label) {
        self.map.insert(spelling.into(), label);
    }

    /// Parses `spelling=Label,...` where `Label` is a canonical spelling, and
    /// adds the entries to the default map.
    pub fn with_overrides(spec: &str) -> Result<Self> {
        let mut out = LabelMap::default();
        let canonical = LabelMap::default();
        for pair in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (from, to) = pair
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("label map entry {pair:?}")))?;
            let label = canonical.get(to.trim()).ok_or_else(|| {
                Error::InvalidArgument(format!("label map target {to:?} is not a label"))
            })?;
            out.insert(from.trim(), label);
        }
        Ok(out)
    }

    pub fn get(&self, spelling: &str) -> Option<Label> {
        self.map.get(spelling).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comment {
    pub id: u64,
    pub text: String,
    pub label: Label,
    pub translation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    comments: Vec<Comment>,
}

impl Dataset {
    /// Builds a dataset, rejecting duplicate ids and empty texts.
    pub fn new(name: impl Into<String>, comments: Vec<Comment>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(comments.len());
        for c in &comments {
            if !seen.insert(c.id) {
                return Err(Error::DuplicateId(c.id));
            }
            if c.text.trim().is_empty() {
                return Err(Error::InvalidArgument(format!("comment {} has empty text", c.id)));
            }
        }
        Ok(Dataset {
            name: name.into(),
            comments,
        })
    }

    pub fn comments(&self) -> &[Comment] {
        &self.comments
    }

    pub fn len(&self) -> usize {
        self.comments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comments.is_empty()
    }

    pub fn label_counts(&self) -> BTreeMap<Label, usize> {
        let mut counts = BTreeMap::new();
        for c in &self.comments {
            *counts.entry(c.label).or_insert(0) += 1;
        }
        counts
    }

    /// Binary class indices of every comment; fails on `NotKannada`.
    pub fn class_indices(&self) -> Result<Vec<usize>> {
        self.comments
            .iter()
            .map(|c| {
                c.label.class_index().ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "comment {} is labelled {}; filter the dataset first",
                        c.id, c.label
                    ))
                })
            })
            .collect()
    }
}

/// Reads a dataset CSV.
pub fn load_dataset(path: impl AsRef<Path>, labels: &LabelMap) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_dataset(file, name, labels)
}

/// Reads a dataset from any CSV source. Row numbers in errors are 1-based
/// line numbers of the source.
pub fn read_dataset(reader: impl Read, name: impl Into<String>, labels: &LabelMap) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.byte_headers().map_err(|e| csv_row_error(e, 1))?.clone();
    let column = |want: &str| {
        headers
            .iter()
            .position(|h| String::from_utf8_lossy(h).trim().eq_ignore_ascii_case(want))
    };
    let text_col = column("text").ok_or_else(|| Error::MalformedRow {
        row: 1,
        message: "header has no `text` column".into(),
    })?;
    let label_col = column("label").ok_or_else(|| Error::MalformedRow {
        row: 1,
        message: "header has no `label` column".into(),
    })?;
    let translation_col = column("translation");

    let mut comments = Vec::new();
    for record in rdr.byte_records() {
        let record = record.map_err(|e| csv_row_error(e, 0))?;
        let row = record.position().map_or(0, |p| p.line());
        let field = |i: usize| -> Result<Option<&str>> {
            match record.get(i) {
                None => Ok(None),
                Some(bytes) => std::str::from_utf8(bytes)
                    .map(Some)
                    .map_err(|_| Error::NonUtf8 { row }),
            }
        };
        let text = field(text_col)?.unwrap_or_default();
        if text.trim().is_empty() {
            return Err(Error::MalformedRow {
                row,
                message: "empty text".into(),
            });
        }
        let raw_label = field(label_col)?.unwrap_or_default().trim();
        let label = labels.get(raw_label).ok_or_else(|| Error::UnknownLabel {
            row,
            label: raw_label.to_string(),
        })?;
        let translation = match translation_col {
            Some(i) => field(i)?.filter(|t| !t.trim().is_empty()).map(str::to_string),
            None => None,
        };
        comments.push(Comment {
            id: comments.len() as u64,
            text: text.to_string(),
            label,
            translation,
        });
    }
    Dataset::new(name, comments)
}

fn csv_row_error(e: csv::Error, fallback_row: u64) -> Error {
    let row = e.position().map_or(fallback_row, |p| p.line());
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::Csv(e),
        _ => Error::MalformedRow {
            row,
            message: e.to_string(),
        },
    }
}

/// Writes a dataset as CSV (`text,label,translation`).
pub fn write_dataset(d: &Dataset, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["text", "label", "translation"])?;
    for c in &d.comments {
        w.write_record([
            c.text.as_str(),
            c.label.as_str(),
            c.translation.as_deref().unwrap_or(""),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn save_dataset(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset(d, std::io::BufWriter::new(file))
}

/// Keeps the comments whose label is in `keep`, preserving order and ids.
pub fn filter_labels(d: &Dataset, keep: &[Label]) -> Result<Dataset> {
    if keep.is_empty() {
        return Err(Error::InvalidArgument("label filter keeps nothing".into()));
    }
    let comments: Vec<Comment> = d
        .comments
        .iter()
        .filter(|c| keep.contains(&c.label))
        .cloned()
        .collect();
    if comments.is_empty() {
        return Err(Error::EmptyResult("label filter".into()));
    }
    Ok(Dataset {
        name: d.name.clone(),
        comments,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub dev_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            dev_fraction: 0.1,
            test_fraction: 0.1,
            seed: 0,
            stratified: true,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let fs = [self.train_fraction, self.dev_fraction, self.test_fraction];
        if fs.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return Err(Error::InvalidArgument(format!(
                "split fractions must lie in (0, 1), got {fs:?}"
            )));
        }
        if (fs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "split fractions must sum to 1, got {fs:?}"
            )));
        }
        Ok(())
    }

    /// Part sizes for `n` items: dev and test get `round(n * f)`, train the rest.
    pub fn sizes(&self, n: usize) -> [usize; 3] {
        let dev = (n as f64 * self.dev_fraction).round() as usize;
        let test = (n as f64 * self.test_fraction).round() as usize;
        [n.saturating_sub(dev + test), dev, test]
    }
}

/// Splits a dataset into train, dev and test parts.
///
/// Part sizes follow [`SplitSpec::sizes`]. With stratification, every class
/// contributes `floor` or `ceil` of its proportional share to every part
/// (a controlled rounding of the class × part quota matrix). Each part keeps
/// the input order.
pub fn split(d: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
    spec.validate()?;
    if d.is_empty() {
        return Err(Error::InvalidArgument("cannot split an empty dataset".into()));
    }
    let n = d.len();
    let sizes = spec.sizes(n);
    if let Some(i) = sizes.iter().position(|&s| s == 0) {
        let part = ["train", "dev", "test"][i];
        return Err(Error::EmptyResult(format!("split ({part} part for n = {n})")));
    }

    let mut groups: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
    if spec.stratified {
        for (i, c) in d.comments.iter().enumerate() {
            groups.entry(c.label).or_default().push(i);
        }
    } else {
        groups.insert(Label::NotHope, (0..n).collect());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, "split"));
    let group_sizes: Vec<usize> = groups.values().map(Vec::len).collect();
    let alloc = controlled_round(&group_sizes, &sizes, n);

    let mut parts: [Vec<usize>; 3] = Default::default();
    for (members, row) in groups.values_mut().zip(&alloc) {
        members.shuffle(&mut rng);
        let mut start = 0;
        for (part, &take) in parts.iter_mut().zip(row) {
            part.extend_from_slice(&members[start..start + take]);
            start += take;
        }
    }
    let [train, dev, test] = parts.map(|mut idx| {
        idx.sort_unstable();
        Dataset {
            name: d.name.clone(),
            comments: idx.into_iter().map(|i| d.comments[i].clone()).collect(),
        }
    });
    Ok((train, dev, test))
}

/// Rounds the quota matrix `q[c][s] = rows[c] * cols[s] / n` to integers so
/// that every row sums to `rows[c]`, every column to `cols[s]`, and every
/// entry is the floor or the ceiling of its quota.
fn controlled_round(rows: &[usize], cols: &[usize; 3], n: usize) -> Vec<[usize; 3]> {
    let mut out = vec![[0usize; 3]; rows.len()];
    // fractional numerators: q = floor + rem / n
    let mut rem = vec![[0usize; 3]; rows.len()];
    for (c, &r) in rows.iter().enumerate() {
        for s in 0..3 {
            out[c][s] = r * cols[s] / n;
            rem[c][s] = r * cols[s] % n;
        }
    }
    let mut row_need: Vec<usize> = rows
        .iter()
        .zip(&out)
        .map(|(&r, o)| r - o.iter().sum::<usize>())
        .collect();
    let mut col_need: [usize; 3] =
        std::array::from_fn(|s| cols[s] - out.iter().map(|o| o[s]).sum::<usize>());

    // Bipartite b-matching on cells with a nonzero remainder; the
    // augmenting-path search always saturates (integral transportation polytope).
    let mut bumped = vec![[false; 3]; rows.len()];
    while let Some(start) = (0..rows.len()).find(|&c| row_need[c] > 0) {
        let mut visited_rows = vec![false; rows.len()];
        let mut path = Vec::new();
        if !augment(start, &rem, &bumped, &col_need, &mut visited_rows, &mut path) {
            // unreachable for consistent margins; leave the remainder to the
            // first columns with capacity rather than loop forever
            let s = (0..3).find(|&s| col_need[s] > 0).unwrap_or(0);
            out[start][s] += row_need[start];
            col_need[s] = col_need[s].saturating_sub(row_need[start]);
            row_need[start] = 0;
            continue;
        }
        // path alternates: (row, col) add, (row, col) remove, ...
        for (k, &(c, s)) in path.iter().enumerate() {
            if k % 2 == 0 {
                bumped[c][s] = true;
                out[c][s] += 1;
            } else {
                bumped[c][s] = false;
                out[c][s] -= 1;
            }
        }
        let &(_, last_col) = path.last().expect("non-empty augmenting path");
        row_need[start] -= 1;
        col_need[last_col] -= 1;
    }
    out
}

fn augment(
    row: usize,
    rem: &[[usize; 3]],
    bumped: &[[bool; 3]],
    col_need: &[usize; 3],
    visited_rows: &mut [bool],
    path: &mut Vec<(usize, usize)>,
) -> bool {
    visited_rows[row] = true;
    // prefer the largest remainders, then lower part index
    let mut order: Vec<usize> = (0..3).filter(|&s| rem[row][s] > 0 && !bumped[row][s]).collect();
    order.sort_by(|&a, &b| rem[row][b].cmp(&rem[row][a]).then(a.cmp(&b)));
    for s in order {
        path.push((row, s));
        if col_need[s] > 0 {
            return true;
        }
        // reroute: some other row currently bumped in column s gives it up
        for other in 0..rem.len() {
            if !visited_rows[other] && bumped[other][s] {
                path.push((other, s));
                if augment(other, rem, bumped, col_need, visited_rows, path) {
                    return true;
                }
                path.pop();
            }
        }
        path.pop();
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    #[serde(rename = "posts")]
    pub num_posts: usize,
    #[serde(rename = "tokens")]
    pub num_tokens: usize,
    #[serde(rename = "vocab")]
    pub vocab_size: usize,
    #[serde(rename = "sentences")]
    pub num_sentences: usize,
    pub tokens_per_post: usize,
    pub sentences_per_post: usize,
}

/// Word and sentence counts over a dataset, using [`features::tokenize`] and
/// [`features::sentences`].
pub fn corpus_stats(d: &Dataset) -> CorpusStats {
    let mut vocab = HashSet::new();
    let mut num_tokens = 0;
    let mut num_sentences = 0;
    for c in &d.comments {
        let tokens = features::tokenize(&c.text);
        num_tokens += tokens.len();
        vocab.extend(tokens);
        num_sentences += features::sentences(&c.text).len();
    }
    let num_posts = d.len();
    let per_post = |x: usize| x.checked_div(num_posts).unwrap_or(0);
    CorpusStats {
        num_posts,
        num_tokens,
        vocab_size: vocab.len(),
        num_sentences,
        tokens_per_post: per_post(num_tokens),
        sentences_per_post: per_post(num_sentences),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(labels: &[Label]) -> Dataset {
        let comments = labels
            .iter()
            .enumerate()
            .map(|(i, &label)| Comment {
                id: i as u64,
                text: format!("comment number {i}"),
                label,
                translation: None,
            })
            .collect();
        Dataset::new("t", comments).unwrap()
    }

    #[test]
    fn load_reports_unknown_label_row() {
        let csv = "text,label\nfine,Hope\nhmm,Maybe\n";
        let err = read_dataset(csv.as_bytes(), "x", &LabelMap::default()).unwrap_err();
        assert!(matches!(err, Error::UnknownLabel { row: 3, ref label } if label == "Maybe"));
    }

    #[test]
    fn load_header_only_is_empty() {
        let d = read_dataset("text,label\n".as_bytes(), "x", &LabelMap::default()).unwrap();
        assert!(d.is_empty());
    }

    #[test]
    fn load_rejects_bad_bytes_and_short_rows() {
        let mut bytes = b"text,label\nok,Hope\n".to_vec();
        bytes.extend_from_slice(b"\xff\xfe,Hope\n");
        let err = read_dataset(bytes.as_slice(), "x", &LabelMap::default()).unwrap_err();
        assert!(matches!(err, Error::NonUtf8 { row: 3 }));

        let err = read_dataset("text,label\nonly-one-field\n".as_bytes(), "x", &LabelMap::default())
            .unwrap_err();
        assert!(matches!(err, Error::MalformedRow { row: 2, .. }), "{err}");
    }

    #[test]
    fn load_missing_file() {
        let err = load_dataset("/definitely/not/here.csv", &LabelMap::default()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(!err.is_validation());
    }

    #[test]
    fn load_quoted_fields_and_translation() {
        let csv = "text,label,translation\n\"a, \"\"quoted\"\" text\",Not-Hope,\nನಮ್ಮ,Hope,ours\n";
        let d = read_dataset(csv.as_bytes(), "x", &LabelMap::default()).unwrap();
        assert_eq!(d.comments()[0].text, "a, \"quoted\" text");
        assert_eq!(d.comments()[0].translation, None);
        assert_eq!(d.comments()[1].translation.as_deref(), Some("ours"));
        assert_eq!(d.comments()[1].id, 1);
    }

    #[test]
    fn label_map_overrides() {
        let m = LabelMap::with_overrides("hope=Hope, not-hope=Not-Hope").unwrap();
        assert_eq!(m.get("hope"), Some(Label::Hope));
        assert_eq!(m.get("Hope"), Some(Label::Hope));
        assert!(LabelMap::with_overrides("x=Maybe").is_err());
    }

    #[test]
    fn filter_identity_and_empty() {
        let d = ds(&[Label::Hope, Label::NotKannada, Label::NotHope]);
        assert_eq!(filter_labels(&d, &Label::ALL).unwrap(), d);
        let kept = filter_labels(&d, &[Label::Hope, Label::NotHope]).unwrap();
        assert_eq!(kept.comments().iter().map(|c| c.id).collect::<Vec<_>>(), [0, 2]);

        let only_nk = ds(&[Label::NotKannada, Label::NotKannada]);
        assert!(matches!(
            filter_labels(&only_nk, &[Label::Hope]),
            Err(Error::EmptyResult(_))
        ));
    }

    #[test]
    fn split_sizes_of_full_corpus() {
        assert_eq!(SplitSpec::default().sizes(6176), [4940, 618, 618]);
        assert_eq!(SplitSpec::default().sizes(10), [8, 1, 1]);
    }

    #[test]
    fn split_is_deterministic() {
        let d = ds(&[Label::Hope; 10]);
        let a = split(&d, &SplitSpec::default()).unwrap();
        let b = split(&d, &SplitSpec::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn split_rejects_empty_part() {
        let d = ds(&[Label::Hope; 3]);
        assert!(matches!(
            split(&d, &SplitSpec::default()),
            Err(Error::EmptyResult(_))
        ));
    }

    #[test]
    fn split_spec_validation() {
        let bad = SplitSpec {
            train_fraction: 0.8,
            dev_fraction: 0.1,
            test_fraction: 0.2,
            ..SplitSpec::default()
        };
        assert!(bad.validate().is_err());
        let zero = SplitSpec {
            train_fraction: 1.0,
            dev_fraction: 0.0,
            test_fraction: 0.0,
            ..SplitSpec::default()
        };
        assert!(zero.validate().is_err());
    }

    #[test]
    fn stratified_split_of_65_35() {
        let mut labels = vec![Label::NotHope; 65];
        labels.extend([Label::Hope; 35]);
        let d = ds(&labels);
        let (train, dev, test) = split(&d, &SplitSpec::default()).unwrap();
        let tc = train.label_counts();
        // exhaustive recount of the quota bound for every class and part
        for (part, frac) in [(&train, 0.8), (&dev, 0.1), (&test, 0.1)] {
            let counts = part.label_counts();
            for (label, total) in [(Label::NotHope, 65.0), (Label::Hope, 35.0)] {
                let got = *counts.get(&label).unwrap_or(&0) as f64;
                assert!((got - total * frac).abs() <= 1.0, "{label} {got}");
            }
        }
        assert!((tc[&Label::NotHope] as i64 - 52).abs() <= 1);
        assert!((tc[&Label::Hope] as i64 - 28).abs() <= 1);
    }

    #[test]
    fn controlled_rounding_respects_margins() {
        for rows in [vec![4064, 2112], vec![65, 35], vec![3, 3, 4], vec![1, 1, 1, 7]] {
            let n: usize = rows.iter().sum();
            let spec = SplitSpec::default();
            let cols = spec.sizes(n);
            let out = controlled_round(&rows, &cols, n);
            for (c, row) in out.iter().enumerate() {
                assert_eq!(row.iter().sum::<usize>(), rows[c]);
                for s in 0..3 {
                    let q = rows[c] as f64 * cols[s] as f64 / n as f64;
                    assert!(row[s] as f64 >= q.floor() && row[s] as f64 <= q.ceil(), "{rows:?}");
                }
            }
            for s in 0..3 {
                assert_eq!(out.iter().map(|r| r[s]).sum::<usize>(), cols[s]);
            }
        }
    }

    #[test]
    fn stats_small_cases() {
        let mut d = ds(&[Label::Hope]);
        d.comments[0].text = "a b a".into();
        let s = corpus_stats(&d);
        assert_eq!((s.num_posts, s.num_tokens, s.vocab_size), (1, 3, 2));

        let mut d = ds(&[Label::Hope, Label::NotHope]);
        d.comments[0].text = "one two three four".into();
        d.comments[1].text = "one two three four five six".into();
        assert_eq!(corpus_stats(&d).tokens_per_post, 5);

        let empty = Dataset::new("e", vec![]).unwrap();
        assert_eq!(corpus_stats(&empty).tokens_per_post, 0);
    }
}
