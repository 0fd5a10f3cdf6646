//! Random forests: bagged CART trees with per-node feature subsampling.
//!
//! Tree `i` draws everything (bootstrap sample, feature subsets) from a
//! ChaCha8 stream seeded with `derive_indexed_seed(seed, "forest", i)`, so
//! trees can be grown in parallel and the result does not depend on the
//! thread count. Class probabilities are vote fractions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{columns, grow, FeatureSampler};
use super::{argmax, check_training_set, Classifier, TreeConfig, TreeModel};
use crate::hashing::derive_indexed_seed;
use crate::sparse::SparseVector;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// `max(1, floor(√V))`.
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, dim: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((dim as f64).sqrt() as usize).max(1),
            MaxFeatures::All => dim.max(1),
            MaxFeatures::Count(n) => n.clamp(1, dim.max(1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub tree: TreeConfig,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            tree: TreeConfig {
                max_depth: usize::MAX,
                min_samples_split: 2,
            },
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeModel>,
    pub config: ForestConfig,
    pub num_classes: usize,
    pub dim: usize,
}

impl Classifier for ForestModel {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn proba_unchecked(&self, x: &SparseVector) -> Vec<f64> {
        let mut votes = vec![0.0; self.num_classes];
        for t in &self.trees {
            votes[argmax(&t.proba_unchecked(x))] += 1.0;
        }
        let n = self.trees.len() as f64;
        votes.iter().map(|v| v / n).collect()
    }
}

pub fn fit_forest(x: &[SparseVector], y: &[usize], dim: usize, config: &ForestConfig) -> Result<ForestModel> {
    let k = check_training_set(x, y, dim)?;
    if config.n_trees == 0 {
        return Err(Error::InvalidArgument("a forest needs at least one tree".into()));
    }
    let max_features = config.max_features.resolve(dim);
    let n = x.len();
    let cols = columns(x, dim);
    let trees = (0..config.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_indexed_seed(config.seed, "forest", i as u64));
            let mut weights = vec![0u32; n];
            if config.bootstrap {
                for _ in 0..n {
                    weights[rng.gen_range(0..n)] += 1;
                }
            } else {
                weights.iter_mut().for_each(|w| *w = 1);
            }
            let sampler = FeatureSampler {
                rng: &mut rng,
                max_features,
                columns: &cols,
            };
            grow(x, y, &weights, k, dim, &config.tree, Some(sampler))
        })
        .collect();
    Ok(ForestModel {
        trees,
        config: *config,
        num_classes: k,
        dim,
    })
}

#[cfg(test)]
mod tests {
    use super::super::fit_tree;
    use super::*;

    fn data() -> (Vec<SparseVector>, Vec<usize>) {
        let x = (0..60)
            .map(|i| {
                SparseVector::from_pairs(vec![
                    (i % 7, 1.0 + (i % 3) as f64),
                    (7 + i % 5, 0.5),
                    (12 + (i * i) % 9, 0.25 * (i % 4) as f64),
                ])
                .unwrap()
            })
            .collect();
        let y = (0..60).map(|i| usize::from(i % 7 < 3 || i % 5 == 0)).collect();
        (x, y)
    }

    #[test]
    fn single_unbagged_tree_equals_plain_tree() {
        let (x, y) = data();
        let tree_cfg = TreeConfig::default();
        let cfg = ForestConfig {
            n_trees: 1,
            tree: tree_cfg,
            max_features: MaxFeatures::All,
            bootstrap: false,
            seed: 3,
        };
        let f = fit_forest(&x, &y, 21, &cfg).unwrap();
        let t = fit_tree(&x, &y, 21, &tree_cfg).unwrap();
        assert_eq!(f.trees[0], t);
        assert_eq!(f.predict(&x).unwrap(), t.predict(&x).unwrap());
    }

    #[test]
    fn same_seed_same_forest() {
        let (x, y) = data();
        let cfg = ForestConfig {
            n_trees: 8,
            ..Default::default()
        };
        assert_eq!(fit_forest(&x, &y, 21, &cfg).unwrap(), fit_forest(&x, &y, 21, &cfg).unwrap());
        let other = ForestConfig { seed: 1, ..cfg };
        assert_ne!(fit_forest(&x, &y, 21, &cfg).unwrap(), fit_forest(&x, &y, 21, &other).unwrap());
    }

    #[test]
    fn probabilities_are_vote_fractions() {
        let leaf = |c: usize| TreeModel {
            nodes: vec![super::super::Node::Leaf {
                class_counts: if c == 0 { vec![3, 1] } else { vec![0, 2] },
            }],
            config: TreeConfig::default(),
            criterion: "gini".into(),
            num_classes: 2,
            dim: 1,
        };
        let trees = (0..100).map(|i| leaf(usize::from(i < 60))).collect();
        let f = ForestModel {
            trees,
            config: ForestConfig::default(),
            num_classes: 2,
            dim: 1,
        };
        assert_eq!(f.predict_proba_one(&SparseVector::new()).unwrap(), vec![0.4, 0.6]);
    }

    #[test]
    fn max_features_rule() {
        assert_eq!(MaxFeatures::Sqrt.resolve(18_807), 137);
        assert_eq!(MaxFeatures::Sqrt.resolve(0), 1);
        assert_eq!(MaxFeatures::Count(50).resolve(10), 10);
    }
}
