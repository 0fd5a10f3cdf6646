//! Inter-annotator reliability with Krippendorff's alpha (nominal metric).
//!
//! Annotation tables may be incomplete: annotators need not label every
//! unit. Units with fewer than two labels are not pairable and drop out.
//!
//! For a unit with `m >= 2` values, every ordered pair of values from
//! different annotators contributes `1 / (m - 1)` to the coincidence matrix
//! `o[c][k]`. With `n_c = sum_k o[c][k]` and `n = sum_c n_c`:
//!
//! ```text
//! D_o   = sum_{c != k} o[c][k] / n
//! D_e   = sum_{c != k} n_c * n_k / (n * (n - 1))
//! alpha = 1 - D_o / D_e
//! ```

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Label, LabelMap};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub unit_id: String,
    pub annotator_id: String,
    pub label: Label,
}

impl AnnotationRecord {
    pub fn new(unit: impl Into<String>, annotator: impl Into<String>, label: Label) -> Self {
        AnnotationRecord {
            unit_id: unit.into(),
            annotator_id: annotator.into(),
            label,
        }
    }
}

/// Symmetric value-by-value coincidence counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceMatrix {
    pub labels: Vec<Label>,
    pub counts: Vec<Vec<f64>>,
    /// Total number of pairable values.
    pub n: f64,
}

impl CoincidenceMatrix {
    /// Marginal `n_c` of each label.
    pub fn marginals(&self) -> Vec<f64> {
        self.counts.iter().map(|row| row.iter().sum()).collect()
    }

    pub fn get(&self, c: Label, k: Label) -> f64 {
        let pos = |l| self.labels.iter().position(|&x| x == l);
        match (pos(c), pos(k)) {
            (Some(i), Some(j)) => self.counts[i][j],
            _ => 0.0,
        }
    }
}

fn check_unique(records: &[AnnotationRecord]) -> Result<()> {
    let mut seen = HashSet::with_capacity(records.len());
    for r in records {
        if !seen.insert((r.unit_id.as_str(), r.annotator_id.as_str())) {
            return Err(Error::InvalidArgument(format!(
                "annotator {} labelled unit {} twice",
                r.annotator_id, r.unit_id
            )));
        }
    }
    Ok(())
}

/// Builds the coincidence matrix over all labels in [`Label::ALL`] order.
pub fn coincidence_matrix(records: &[AnnotationRecord]) -> Result<CoincidenceMatrix> {
    check_unique(records)?;
    let labels = Label::ALL.to_vec();
    let k = labels.len();
    let mut units: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for r in records {
        let idx = labels.iter().position(|&l| l == r.label).expect("label in ALL");
        units.entry(r.unit_id.as_str()).or_default().push(idx);
    }

    let mut counts = vec![vec![0.0; k]; k];
    let mut n = 0.0;
    for values in units.values().filter(|v| v.len() >= 2) {
        let m = values.len();
        // per-unit value counts keep this O(k^2) instead of O(m^2)
        let mut per = vec![0usize; k];
        values.iter().for_each(|&v| per[v] += 1);
        let w = 1.0 / (m - 1) as f64;
        for c in 0..k {
            if per[c] == 0 {
                continue;
            }
            for kk in 0..k {
                let pairs = if c == kk {
                    per[c] * (per[c] - 1)
                } else {
                    per[c] * per[kk]
                };
                counts[c][kk] += pairs as f64 * w;
            }
        }
        n += m as f64;
    }
    Ok(CoincidenceMatrix { labels, counts, n })
}

/// Observed and expected disagreement of a coincidence matrix.
pub fn disagreements(m: &CoincidenceMatrix) -> (f64, f64) {
    let marg = m.marginals();
    let k = m.labels.len();
    let mut observed = 0.0;
    let mut expected = 0.0;
    for c in 0..k {
        for kk in 0..k {
            if c != kk {
                observed += m.counts[c][kk];
                expected += marg[c] * marg[kk];
            }
        }
    }
    if m.n == 0.0 {
        return (0.0, 0.0);
    }
    (observed / m.n, expected / (m.n * (m.n - 1.0)))
}

/// Krippendorff's alpha with the nominal difference function.
///
/// ```
/// use kanhope::agreement::{krippendorff_alpha, AnnotationRecord};
/// use kanhope::corpus::Label::{Hope, NotHope};
///
/// let records = [
///     AnnotationRecord::new("u1", "a", Hope),
///     AnnotationRecord::new("u1", "b", Hope),
///     AnnotationRecord::new("u2", "a", Hope),
///     AnnotationRecord::new("u2", "b", NotHope),
/// ];
/// assert_eq!(krippendorff_alpha(&records).unwrap(), 0.0);
/// ```
pub fn krippendorff_alpha(records: &[AnnotationRecord]) -> Result<f64> {
    let m = coincidence_matrix(records)?;
    if m.n == 0.0 {
        return Err(Error::UndefinedAlpha("no unit has two or more annotations".into()));
    }
    let (d_o, d_e) = disagreements(&m);
    if d_e == 0.0 {
        return Err(Error::UndefinedAlpha(
            "every pairable value is identical (no expected disagreement)".into(),
        ));
    }
    if d_o == 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - d_o / d_e)
}

/// Reads `unit_id,annotator_id,label` CSV.
pub fn read_annotations(reader: impl Read, labels: &LabelMap) -> Result<Vec<AnnotationRecord>> {
    #[derive(Deserialize)]
    struct Row {
        unit_id: String,
        annotator_id: String,
        label: String,
    }
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize::<Row>() {
        let row = row.map_err(|e| Error::MalformedRow {
            row: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = out.len() as u64 + 2;
        let label = labels.get(row.label.trim()).ok_or_else(|| Error::UnknownLabel {
            row: line,
            label: row.label.clone(),
        })?;
        out.push(AnnotationRecord {
            unit_id: row.unit_id,
            annotator_id: row.annotator_id,
            label,
        });
    }
    Ok(out)
}

pub fn load_annotations(path: impl AsRef<Path>, labels: &LabelMap) -> Result<Vec<AnnotationRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_annotations(file, labels)
}

/// Annotator background, one row of the roster file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatorInfo {
    pub annotator_id: String,
    pub gender: String,
    pub higher_education: String,
    pub medium_of_schooling: String,
}

pub fn read_roster(reader: impl Read) -> Result<Vec<AnnotatorInfo>> {
    let mut rdr = csv::Reader::from_reader(reader);
    rdr.deserialize()
        .map(|r| {
            r.map_err(|e: csv::Error| Error::MalformedRow {
                row: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorRow {
    pub annotator_id: String,
    pub annotations: usize,
    pub info: Option<AnnotatorInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorSummary {
    pub rows: Vec<AnnotatorRow>,
    /// Per-column tallies of the roster (e.g. `gender` → `Female` → 3).
    pub demographics: BTreeMap<String, BTreeMap<String, usize>>,
    pub total_annotators: usize,
    /// Annotators present in the records but missing from the roster.
    pub missing_from_roster: Vec<String>,
}

/// Per-annotator annotation counts joined with the roster.
pub fn annotator_summary(records: &[AnnotationRecord], roster: &[AnnotatorInfo]) -> AnnotatorSummary {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records {
        *counts.entry(r.annotator_id.as_str()).or_insert(0) += 1;
    }
    let ids: BTreeSet<&str> = counts
        .keys()
        .copied()
        .chain(roster.iter().map(|a| a.annotator_id.as_str()))
        .collect();

    let mut missing = Vec::new();
    let rows = ids
        .into_iter()
        .map(|id| {
            let info = roster.iter().find(|a| a.annotator_id == id).cloned();
            if info.is_none() {
                log::warn!("annotator {id} is not in the roster");
                missing.push(id.to_string());
            }
            AnnotatorRow {
                annotator_id: id.to_string(),
                annotations: counts.get(id).copied().unwrap_or(0),
                info,
            }
        })
        .collect();

    let mut demographics: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for a in roster {
        for (col, value) in [
            ("gender", &a.gender),
            ("higher_education", &a.higher_education),
            ("medium_of_schooling", &a.medium_of_schooling),
        ] {
            *demographics
                .entry(col.to_string())
                .or_default()
                .entry(value.clone())
                .or_insert(0) += 1;
        }
    }
    AnnotatorSummary {
        rows,
        demographics,
        total_annotators: roster.len(),
        missing_from_roster: missing,
    }
}
