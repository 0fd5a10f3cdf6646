//! Sorted sparse vectors.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A sparse real vector stored as `(index, value)` pairs with strictly
/// increasing indices and no explicit zeros.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a vector from unordered pairs. Duplicate indices are summed and
    /// resulting zeros dropped.
    pub fn from_pairs(mut pairs: Vec<(u32, f64)>) -> Result<Self> {
        if let Some((i, v)) = pairs.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature {i} = {v}")));
        }
        pairs.sort_by_key(|&(i, _)| i);
        let mut entries: Vec<(u32, f64)> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            match entries.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => entries.push((i, v)),
            }
        }
        entries.retain(|&(_, v)| v != 0.0);
        Ok(SparseVector { entries })
    }

    /// Builds a vector from a dense slice, skipping zeros.
    pub fn from_dense(values: &[f64]) -> Result<Self> {
        let pairs = values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i as u32, v))
            .collect();
        Self::from_pairs(pairs)
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// One past the largest stored index (0 for the empty vector).
    pub fn min_dim(&self) -> usize {
        self.entries.last().map_or(0, |&(i, _)| i as usize + 1)
    }

    pub fn get(&self, index: u32) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map_or(0.0, |pos| self.entries[pos].1)
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|&(i, v)| v * dense[i as usize])
            .sum()
    }

    /// Minkowski distance of order `p` between two sparse vectors.
    pub fn minkowski(&self, other: &SparseVector, p: f64) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j) = (0, 0);
        let mut acc = 0.0;
        let mut add = |d: f64| {
            acc += if p == 2.0 { d * d } else { d.abs().powf(p) };
        };
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    add(a[i].1);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    add(b[j].1);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    add(a[i].1 - b[j].1);
                    i += 1;
                    j += 1;
                }
            }
        }
        a[i..].iter().for_each(|&(_, v)| add(v));
        b[j..].iter().for_each(|&(_, v)| add(v));
        if p == 2.0 {
            acc.sqrt()
        } else if p == 1.0 {
            acc
        } else {
            acc.powf(1.0 / p)
        }
    }

    /// Dense copy with `dim` slots.
    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for &(i, v) in &self.entries {
            out[i as usize] = v;
        }
        out
    }
}
