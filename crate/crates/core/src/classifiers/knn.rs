//! k-nearest neighbours with Minkowski distance and uniform votes.

use serde::{Deserialize, Serialize};

use super::{check_training_set, Classifier};
use crate::sparse::SparseVector;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub stored_vectors: Vec<SparseVector>,
    pub stored_labels: Vec<usize>,
    pub k: usize,
    pub p: f64,
    pub num_classes: usize,
    pub dim: usize,
}

impl KnnModel {
    /// Stored indices of the `k` nearest points, nearest first. Equal
    /// distances go to the lower stored index.
    pub fn neighbours(&self, x: &SparseVector) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = self
            .stored_vectors
            .iter()
            .enumerate()
            .map(|(i, s)| (x.minkowski(s, self.p), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < d.len() {
            d.select_nth_unstable_by(self.k - 1, cmp);
            d.truncate(self.k);
        }
        d.sort_unstable_by(cmp);
        d.into_iter().map(|(_, i)| i).collect()
    }
}

impl Classifier for KnnModel {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn proba_unchecked(&self, x: &SparseVector) -> Vec<f64> {
        let mut votes = vec![0.0; self.num_classes];
        for i in self.neighbours(x) {
            votes[self.stored_labels[i]] += 1.0;
        }
        votes.iter().map(|v| v / self.k as f64).collect()
    }
}

pub fn fit_knn(x: &[SparseVector], y: &[usize], dim: usize, k: usize, p: f64) -> Result<KnnModel> {
    let num_classes = check_training_set(x, y, dim)?;
    if k == 0 || k > x.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must lie in 1..={}",
            x.len()
        )));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("Minkowski power must be >= 1, got {p}")));
    }
    Ok(KnnModel {
        stored_vectors: x.to_vec(),
        stored_labels: y.to_vec(),
        k,
        p,
        num_classes,
        dim,
    })
}
