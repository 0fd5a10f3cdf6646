//! Classical baselines over TF-IDF sparse vectors.
//!
//! Every model implements [`Classifier`]: `predict_proba` returns one
//! probability row per input and `predict` is its argmax, with ties going to
//! the lowest class index. Labels are class indices `0..num_classes`.
//!
//! Fitted models persist as versioned JSON tagged with a `model_kind` field,
//! see [`ClassifierModel`].

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::sparse::SparseVector;
use crate::{Error, Result};

mod forest;
mod knn;
mod logreg;
mod naive_bayes;
mod tree;

pub use forest::{fit_forest, ForestConfig, ForestModel, MaxFeatures};
pub use knn::{fit_knn, KnnModel};
pub use logreg::{fit_logreg, fit_logreg_traced, LinearModel, LogRegConfig};
pub use naive_bayes::{fit_nb, NbModel};
pub use tree::{fit_tree, Node, TreeConfig, TreeModel};

pub const MODEL_FORMAT_VERSION: u32 = 1;

pub trait Classifier {
    fn num_classes(&self) -> usize;

    /// Feature-space dimension the model was fitted on.
    fn dim(&self) -> usize;

    /// Probabilities for one input; callers have already checked dimensions.
    fn proba_unchecked(&self, x: &SparseVector) -> Vec<f64>;

    fn predict_proba_one(&self, x: &SparseVector) -> Result<Vec<f64>> {
        check_dim(x, self.dim())?;
        Ok(self.proba_unchecked(x))
    }

    fn predict_proba(&self, xs: &[SparseVector]) -> Result<Vec<Vec<f64>>>
    where
        Self: Sync,
    {
        for x in xs {
            check_dim(x, self.dim())?;
        }
        Ok(xs.par_iter().map(|x| self.proba_unchecked(x)).collect())
    }

    fn predict(&self, xs: &[SparseVector]) -> Result<Vec<usize>>
    where
        Self: Sync,
    {
        Ok(self.predict_proba(xs)?.iter().map(|p| argmax(p)).collect())
    }
}

/// Index of the largest entry; the first one on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn check_dim(x: &SparseVector, dim: usize) -> Result<()> {
    if x.min_dim() > dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: x.min_dim() - 1,
        });
    }
    Ok(())
}

/// Validates a training set and returns the number of classes (at least 2).
fn check_training_set(x: &[SparseVector], y: &[usize], dim: usize) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "{} feature vectors but {} labels",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    for v in x {
        check_dim(v, dim)?;
        if let Some((i, val)) = v.entries().iter().find(|(_, val)| !val.is_finite()) {
            return Err(Error::NonFinite(format!("feature {i} = {val}")));
        }
    }
    Ok(y.iter().copied().max().unwrap_or(0).max(1) + 1)
}

fn class_counts(y: &[usize], k: usize) -> Vec<u64> {
    let mut counts = vec![0u64; k];
    for &c in y {
        counts[c] += 1;
    }
    counts
}

/// A fitted model of any kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model_kind", rename_all = "snake_case")]
pub enum ClassifierModel {
    Lr(LinearModel),
    Nb(NbModel),
    Knn(KnnModel),
    Tree(TreeModel),
    Forest(ForestModel),
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    #[serde(flatten)]
    model: ClassifierModel,
}

impl ClassifierModel {
    pub fn kind(&self) -> &'static str {
        match self {
            ClassifierModel::Lr(_) => "lr",
            ClassifierModel::Nb(_) => "nb",
            ClassifierModel::Knn(_) => "knn",
            ClassifierModel::Tree(_) => "tree",
            ClassifierModel::Forest(_) => "forest",
        }
    }

    fn inner(&self) -> &(dyn Classifier + Sync) {
        match self {
            ClassifierModel::Lr(m) => m,
            ClassifierModel::Nb(m) => m,
            ClassifierModel::Knn(m) => m,
            ClassifierModel::Tree(m) => m,
            ClassifierModel::Forest(m) => m,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ModelFile {
            version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            version: u32,
        }
        let header: Header = serde_json::from_str(s)?;
        if header.version != MODEL_FORMAT_VERSION {
            return Err(Error::Version {
                kind: "classifier model",
                found: header.version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        let file: ModelFile = serde_json::from_str(s)?;
        Ok(file.model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

impl Classifier for ClassifierModel {
    fn num_classes(&self) -> usize {
        self.inner().num_classes()
    }

    fn dim(&self) -> usize {
        self.inner().dim()
    }

    fn proba_unchecked(&self, x: &SparseVector) -> Vec<f64> {
        self.inner().proba_unchecked(x)
    }
}
