//! Multinomial naive Bayes with additive smoothing.

use serde::{Deserialize, Serialize};

use super::{check_training_set, class_counts, Classifier};
use crate::sparse::SparseVector;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    pub class_log_prior: Vec<f64>,
    /// `feature_log_prob[c][j] = ln((count_cj + α) / (count_c + α·V))`.
    pub feature_log_prob: Vec<Vec<f64>>,
    pub alpha: f64,
}

impl NbModel {
    /// Unnormalized log posterior per class.
    pub fn joint_log_likelihood(&self, x: &SparseVector) -> Vec<f64> {
        self.class_log_prior
            .iter()
            .zip(&self.feature_log_prob)
            .map(|(&prior, flp)| prior + x.dot_dense(flp))
            .collect()
    }
}

impl Classifier for NbModel {
    fn num_classes(&self) -> usize {
        self.class_log_prior.len()
    }

    fn dim(&self) -> usize {
        self.feature_log_prob.first().map_or(0, Vec::len)
    }

    fn proba_unchecked(&self, x: &SparseVector) -> Vec<f64> {
        let jll = self.joint_log_likelihood(x);
        let max = jll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = jll.iter().map(|&l| (l - max).exp()).collect();
        let z: f64 = exp.iter().sum();
        exp.into_iter().map(|e| e / z).collect()
    }
}

/// Every class in `0..=max(y)` needs at least one document: an empty class
/// would get a log prior of −∞.
pub fn fit_nb(x: &[SparseVector], y: &[usize], dim: usize, alpha: f64) -> Result<NbModel> {
    let k = check_training_set(x, y, dim)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    if let Some((j, v)) = x.iter().flat_map(|v| v.entries()).find(|(_, v)| *v < 0.0) {
        return Err(Error::InvalidArgument(format!("negative feature {j} = {v}")));
    }
    let docs = class_counts(y, k);
    if docs.contains(&0) {
        return Err(Error::SingleClass);
    }
    let mut counts = vec![vec![0.0; dim]; k];
    for (v, &c) in x.iter().zip(y) {
        for &(j, val) in v.entries() {
            counts[c][j as usize] += val;
        }
    }
    let n = y.len() as f64;
    let class_log_prior = docs.iter().map(|&d| (d as f64 / n).ln()).collect();
    let feature_log_prob = counts
        .into_iter()
        .map(|row| {
            let total: f64 = row.iter().sum::<f64>() + alpha * dim as f64;
            let log_total = total.ln();
            row.into_iter().map(|c| (c + alpha).ln() - log_total).collect()
        })
        .collect();
    Ok(NbModel {
        class_log_prior,
        feature_log_prob,
        alpha,
    })
}
