//! Confusion matrices, precision/recall/F1 and report rendering.
//!
//! Per class, with `TP`, `FP`, `FN` read off the confusion matrix:
//!
//! ```text
//! P  = TP / (TP + FP)
//! R  = TP / (TP + FN)
//! F1 = 2PR / (P + R)
//! ```
//!
//! A zero denominator yields 0 and marks the class as degenerate.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
    class_names: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    #[serde(rename = "p")]
    pub precision: f64,
    #[serde(rename = "r")]
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// Set when one of the ratios had a zero denominator.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    #[serde(rename = "p")]
    pub precision: f64,
    #[serde(rename = "r")]
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Averaging {
    Macro,
    Weighted,
    Micro,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

impl ConfusionMatrix {
    /// Counts `(true, predicted)` pairs over class indices.
    pub fn from_predictions<S: AsRef<str>>(
        y_true: &[usize],
        y_pred: &[usize],
        class_names: &[S],
    ) -> Result<Self> {
        if y_true.len() != y_pred.len() {
            return Err(Error::InvalidArgument(format!(
                "{} true labels but {} predictions",
                y_true.len(),
                y_pred.len()
            )));
        }
        let k = class_names.len();
        let mut counts = vec![vec![0u64; k]; k];
        for (&t, &p) in y_true.iter().zip(y_pred) {
            if t >= k || p >= k {
                return Err(Error::InvalidArgument(format!(
                    "label {} is not one of {k} classes",
                    t.max(p)
                )));
            }
            counts[t][p] += 1;
        }
        Ok(ConfusionMatrix {
            counts,
            class_names: class_names.iter().map(|s| s.as_ref().to_string()).collect(),
        })
    }

    pub fn from_counts<S: AsRef<str>>(counts: Vec<Vec<u64>>, class_names: &[S]) -> Result<Self> {
        let k = class_names.len();
        if counts.len() != k || counts.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidArgument(format!("confusion matrix must be {k}x{k}")));
        }
        Ok(ConfusionMatrix {
            counts,
            class_names: class_names.iter().map(|s| s.as_ref().to_string()).collect(),
        })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn support(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    /// Element-wise sum; class names must agree.
    pub fn merged(&self, other: &ConfusionMatrix) -> Result<Self> {
        if self.class_names != other.class_names {
            return Err(Error::InvalidArgument("confusion matrices have different classes".into()));
        }
        let counts = self
            .counts
            .iter()
            .zip(&other.counts)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Ok(ConfusionMatrix {
            counts,
            class_names: self.class_names.clone(),
        })
    }

    pub fn prf(&self, class: usize) -> ClassMetrics {
        let tp = self.counts[class][class];
        let predicted: u64 = self.counts.iter().map(|r| r[class]).sum();
        let support = self.support(class);
        let p = ratio(tp, predicted);
        let r = ratio(tp, support);
        let precision = p.unwrap_or(0.0);
        let recall = r.unwrap_or(0.0);
        ClassMetrics {
            precision,
            recall,
            f1: harmonic(precision, recall),
            support,
            degenerate: p.is_none() || r.is_none(),
        }
    }

    pub fn accuracy(&self) -> Result<f64> {
        let trace: u64 = (0..self.num_classes()).map(|i| self.counts[i][i]).sum();
        ratio(trace, self.total())
            .ok_or_else(|| Error::InvalidArgument("accuracy of an empty confusion matrix".into()))
    }

    pub fn averages(&self, mode: Averaging) -> Averages {
        let k = self.num_classes();
        let per: Vec<ClassMetrics> = (0..k).map(|c| self.prf(c)).collect();
        match mode {
            Averaging::Macro => {
                let mean = |f: fn(&ClassMetrics) -> f64| per.iter().map(f).sum::<f64>() / k as f64;
                Averages {
                    precision: mean(|m| m.precision),
                    recall: mean(|m| m.recall),
                    f1: mean(|m| m.f1),
                }
            }
            Averaging::Weighted => {
                let total = self.total() as f64;
                let mean = |f: fn(&ClassMetrics) -> f64| {
                    if total == 0.0 {
                        0.0
                    } else {
                        per.iter().map(|m| f(m) * m.support as f64).sum::<f64>() / total
                    }
                };
                Averages {
                    precision: mean(|m| m.precision),
                    recall: mean(|m| m.recall),
                    f1: mean(|m| m.f1),
                }
            }
            Averaging::Micro => {
                let tp: u64 = (0..k).map(|i| self.counts[i][i]).sum();
                let total = self.total();
                // every error is one FP and one FN, so sum FP == sum FN
                let p = ratio(tp, total).unwrap_or(0.0);
                Averages {
                    precision: p,
                    recall: p,
                    f1: harmonic(p, p),
                }
            }
        }
    }

    /// Same matrix with classes reordered: new class `i` is old `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        ConfusionMatrix {
            counts: order
                .iter()
                .map(|&i| order.iter().map(|&j| self.counts[i][j]).collect())
                .collect(),
            class_names: order.iter().map(|&i| self.class_names[i].clone()).collect(),
        }
    }
}

/// Metadata identifying the run an evaluation came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub model: String,
    pub seeds: Vec<u64>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl RunMeta {
    pub fn now(model: impl Into<String>, seeds: Vec<u64>) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        RunMeta {
            model: model.into(),
            seeds,
            timestamp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub seeds: Vec<u64>,
    pub per_class: BTreeMap<String, ClassMetrics>,
    /// Class names in matrix order (`per_class` is keyed by name).
    pub classes: Vec<String>,
    pub accuracy: f64,
    #[serde(rename = "macro")]
    pub macro_avg: Averages,
    #[serde(rename = "weighted")]
    pub weighted_avg: Averages,
    /// Confusion counts, summed over seeds for multi-seed reports.
    pub confusion: Vec<Vec<u64>>,
    pub degenerate_classes: Vec<String>,
    pub timestamp: u64,
}

impl EvalReport {
    /// Report of a single evaluation.
    pub fn from_matrix(m: &ConfusionMatrix, meta: RunMeta) -> Result<Self> {
        let accuracy = m.accuracy()?;
        let mut per_class = BTreeMap::new();
        let mut degenerate = Vec::new();
        for (i, name) in m.class_names().iter().enumerate() {
            let cm = m.prf(i);
            if cm.degenerate {
                degenerate.push(name.clone());
            }
            per_class.insert(name.clone(), cm);
        }
        Ok(EvalReport {
            model: meta.model,
            seeds: meta.seeds,
            per_class,
            classes: m.class_names().to_vec(),
            accuracy,
            macro_avg: m.averages(Averaging::Macro),
            weighted_avg: m.averages(Averaging::Weighted),
            confusion: m.counts().to_vec(),
            degenerate_classes: degenerate,
            timestamp: meta.timestamp,
        })
    }

    /// Arithmetic mean of several runs of one model.
    pub fn mean(runs: &[EvalReport]) -> Result<Self> {
        let first = runs
            .first()
            .ok_or_else(|| Error::InvalidArgument("no runs to average".into()))?;
        if runs.iter().any(|r| r.classes != first.classes) {
            return Err(Error::InvalidArgument("runs have different classes".into()));
        }
        let n = runs.len() as f64;
        let avg = |f: &dyn Fn(&EvalReport) -> f64| runs.iter().map(f).sum::<f64>() / n;
        let avg3 = |f: &dyn Fn(&EvalReport) -> Averages| Averages {
            precision: avg(&|r| f(r).precision),
            recall: avg(&|r| f(r).recall),
            f1: avg(&|r| f(r).f1),
        };
        let per_class = first
            .classes
            .iter()
            .map(|name| {
                let m = |r: &EvalReport| r.per_class[name];
                (
                    name.clone(),
                    ClassMetrics {
                        precision: avg(&|r| m(r).precision),
                        recall: avg(&|r| m(r).recall),
                        f1: avg(&|r| m(r).f1),
                        support: m(first).support,
                        degenerate: runs.iter().any(|r| m(r).degenerate),
                    },
                )
            })
            .collect::<BTreeMap<_, _>>();
        let k = first.classes.len();
        let mut confusion = vec![vec![0u64; k]; k];
        for r in runs {
            for (i, row) in r.confusion.iter().enumerate() {
                for (j, &c) in row.iter().enumerate() {
                    confusion[i][j] += c;
                }
            }
        }
        let degenerate_classes = first
            .classes
            .iter()
            .filter(|c| per_class[*c].degenerate)
            .cloned()
            .collect();
        Ok(EvalReport {
            model: first.model.clone(),
            seeds: runs.iter().flat_map(|r| r.seeds.iter().copied()).collect(),
            per_class,
            classes: first.classes.clone(),
            accuracy: avg(&|r| r.accuracy),
            macro_avg: avg3(&|r| r.macro_avg),
            weighted_avg: avg3(&|r| r.weighted_avg),
            confusion,
            degenerate_classes,
            timestamp: runs.iter().map(|r| r.timestamp).max().unwrap_or(0),
        })
    }
}

/// Groups runs by model (first-appearance order), averages each group and
/// renders the result as an aligned text table with per-class P/R/F1,
/// accuracy and weighted P/R/F1, rounded to three decimals.
pub fn report(runs: &[EvalReport]) -> Result<(Vec<EvalReport>, String)> {
    if runs.is_empty() {
        return Err(Error::InvalidArgument("report needs at least one evaluation".into()));
    }
    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<EvalReport>> = BTreeMap::new();
    for r in runs {
        if !groups.contains_key(r.model.as_str()) {
            order.push(&r.model);
        }
        groups.entry(&r.model).or_default().push(r.clone());
    }
    let rows = order
        .iter()
        .map(|m| EvalReport::mean(&groups[m]))
        .collect::<Result<Vec<_>>>()?;
    let table = render_table(&rows);
    Ok((rows, table))
}

pub fn render_table(rows: &[EvalReport]) -> String {
    let classes = rows.first().map(|r| r.classes.clone()).unwrap_or_default();
    let name_w = rows
        .iter()
        .map(|r| r.model.chars().count())
        .chain(std::iter::once(5))
        .max()
        .unwrap_or(5);
    let mut out = String::new();
    let _ = write!(out, "{:<name_w$}", "Model");
    for c in &classes {
        let _ = write!(out, " | {:^20}", c);
    }
    let _ = writeln!(out, " | {:^27}", "Weighted");
    let _ = write!(out, "{:<name_w$}", "");
    for _ in &classes {
        let _ = write!(out, " | {:>6} {:>6} {:>6}", "P", "R", "F1");
    }
    let _ = writeln!(out, " | {:>6} {:>6} {:>6} {:>6}", "Acc", "W(P)", "W(R)", "W(F1)");
    for r in rows {
        let _ = write!(out, "{:<name_w$}", r.model);
        for c in &classes {
            let m = r.per_class[c];
            let _ = write!(out, " | {:>6.3} {:>6.3} {:>6.3}", m.precision, m.recall, m.f1);
        }
        let w = r.weighted_avg;
        let _ = write!(
            out,
            " | {:>6.3} {:>6.3} {:>6.3} {:>6.3}",
            r.accuracy, w.precision, w.recall, w.f1
        );
        if !r.degenerate_classes.is_empty() {
            let _ = write!(out, "  (degenerate: {})", r.degenerate_classes.join(", "));
        }
        out.push('\n');
    }
    out
}
