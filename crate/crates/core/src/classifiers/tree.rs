//! CART decision trees with Gini impurity over sparse inputs.
//!
//! Only features with at least one nonzero value in a node are split
//! candidates; the implicit zeros of a feature form one block at value 0 in
//! the threshold sweep. Candidate thresholds are midpoints between
//! consecutive distinct values and a sample goes left when `x[f] <= t`.
//!
//! Split quality is compared exactly: minimizing weighted child Gini is the
//! same as maximizing `Σc cL²/nL + Σc cR²/nR`, and with integer (bootstrap)
//! sample weights the two fractions are compared by cross-multiplication
//! in `u128`. Ties go to the lowest feature index, then the lowest threshold.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_training_set, Classifier};
use crate::sparse::SparseVector;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub max_depth: usize,
    /// Nodes holding fewer (weighted) samples become leaves.
    pub min_samples_split: u64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: 800,
            min_samples_split: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: u32,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        class_counts: Vec<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    /// Node 0 is the root.
    pub nodes: Vec<Node>,
    pub config: TreeConfig,
    pub criterion: String,
    pub num_classes: usize,
    pub dim: usize,
}

impl TreeModel {
    pub fn leaf(&self, x: &SparseVector) -> &[u64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x.get(*feature) <= *threshold { *left } else { *right },
                Node::Leaf { class_counts } => return class_counts,
            }
        }
    }

    /// Longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        let mut stack = vec![(0usize, 0usize)];
        let mut max = 0;
        while let Some((i, d)) = stack.pop() {
            max = max.max(d);
            if let Node::Split { left, right, .. } = self.nodes[i] {
                stack.push((left, d + 1));
                stack.push((right, d + 1));
            }
        }
        max
    }

    pub fn num_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

impl Classifier for TreeModel {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn proba_unchecked(&self, x: &SparseVector) -> Vec<f64> {
        let counts = self.leaf(x);
        let total: u64 = counts.iter().sum();
        counts.iter().map(|&c| c as f64 / total as f64).collect()
    }
}

pub fn fit_tree(x: &[SparseVector], y: &[usize], dim: usize, config: &TreeConfig) -> Result<TreeModel> {
    let k = check_training_set(x, y, dim)?;
    let weights = vec![1u32; x.len()];
    Ok(grow(x, y, &weights, k, dim, config, None))
}

/// Per-node random feature subsampling used by forests.
pub(super) struct FeatureSampler<'a> {
    pub rng: &'a mut ChaCha8Rng,
    pub max_features: usize,
    pub columns: &'a [Vec<(u32, f64)>],
}

/// Column-major copy of the training matrix: for each feature, the
/// `(sample, value)` pairs of its nonzeros in sample order.
pub(super) fn columns(x: &[SparseVector], dim: usize) -> Vec<Vec<(u32, f64)>> {
    let mut cols = vec![Vec::new(); dim];
    for (i, v) in x.iter().enumerate() {
        for &(j, val) in v.entries() {
            cols[j as usize].push((i as u32, val));
        }
    }
    cols
}

/// Best split found so far: score numerator/denominator, feature, threshold.
struct Best {
    num: u128,
    den: u128,
    feature: u32,
    threshold: f64,
}

struct Task {
    node: usize,
    samples: Vec<u32>,
    depth: usize,
}

/// Node-level context for evaluating candidate features.
struct NodeStats<'a> {
    y: &'a [usize],
    weights: &'a [u32],
    counts: Vec<u64>,
    total: u64,
}

impl NodeStats<'_> {
    fn weight(&self, i: u32) -> u64 {
        u64::from(self.weights[i as usize])
    }

    /// Whether a feature whose node nonzeros are `entries` (sorted by value)
    /// takes at least two distinct values in the node.
    fn varies(&self, entries: &[(f64, u32)]) -> bool {
        let nz: u64 = entries.iter().map(|e| self.weight(e.1)).sum();
        nz < self.total || entries[0].0 != entries[entries.len() - 1].0
    }

    /// Sweeps every threshold of feature `f` and updates `best`.
    fn sweep(&self, f: u32, entries: &[(f64, u32)], left: &mut [u64], best: &mut Option<Best>) {
        let mut zero = self.counts.clone();
        for e in entries {
            zero[self.y[e.1 as usize]] -= self.weight(e.1);
        }
        let split_at = entries.partition_point(|e| e.0 < 0.0);
        let as_item = |e: &(f64, u32)| (e.0, self.y[e.1 as usize], self.weight(e.1));
        let seq = entries[..split_at]
            .iter()
            .map(as_item)
            .chain(zero.iter().enumerate().filter(|(_, &w)| w > 0).map(|(c, &w)| (0.0, c, w)))
            .chain(entries[split_at..].iter().map(as_item));
        left.fill(0);
        let mut n_left = 0u64;
        let mut prev: Option<f64> = None;
        for (v, c, w) in seq {
            if let Some(pv) = prev.filter(|&pv| v > pv) {
                let n_right = self.total - n_left;
                let sq = |a: u64| u128::from(a) * u128::from(a);
                let a: u128 = left.iter().map(|&l| sq(l)).sum();
                let b: u128 = self.counts.iter().zip(&*left).map(|(&t, &l)| sq(t - l)).sum();
                let num = a * u128::from(n_right) + b * u128::from(n_left);
                let den = u128::from(n_left) * u128::from(n_right);
                if best.as_ref().map_or(true, |bst| num * bst.den > bst.num * den) {
                    let mut threshold = pv + (v - pv) / 2.0;
                    if threshold >= v {
                        threshold = pv;
                    }
                    *best = Some(Best {
                        num,
                        den,
                        feature: f,
                        threshold,
                    });
                }
            }
            left[c] += w;
            n_left += w;
            prev = Some(v);
        }
    }
}

/// Grows a tree on the samples with nonzero `weights`.
///
/// Without a sampler every varying feature of a node is swept (nonzeros
/// gathered row-wise and sorted). With one, candidates are drawn uniformly
/// without replacement from the features present in the node, constant ones
/// are skipped, until `max_features` varying features are found; they are
/// then swept in ascending index order. The result is a uniform random
/// subset of the varying features, read column-wise so the cost scales with
/// `max_features` rather than with the node's full vocabulary.
pub(super) fn grow(
    x: &[SparseVector],
    y: &[usize],
    weights: &[u32],
    k: usize,
    dim: usize,
    config: &TreeConfig,
    mut sampler: Option<FeatureSampler<'_>>,
) -> TreeModel {
    let mut nodes = vec![Node::Leaf {
        class_counts: Vec::new(),
    }];
    let root: Vec<u32> = (0..x.len() as u32).filter(|&i| weights[i as usize] > 0).collect();
    let mut stack = vec![Task {
        node: 0,
        samples: root,
        depth: 0,
    }];
    let mut triples: Vec<(u32, f64, u32)> = Vec::new();
    let mut entries: Vec<(f64, u32)> = Vec::new();
    let mut chosen: Vec<(u32, Vec<(f64, u32)>)> = Vec::new();
    let mut present: Vec<u32> = Vec::new();
    // per-sample and per-feature stamps of the node being processed
    let mut sample_mark = vec![usize::MAX; x.len()];
    let mut feature_mark = vec![usize::MAX; if sampler.is_some() { dim } else { 0 }];
    let mut left = vec![0u64; k];
    while let Some(task) = stack.pop() {
        let mut counts = vec![0u64; k];
        for &i in &task.samples {
            counts[y[i as usize]] += u64::from(weights[i as usize]);
        }
        let total: u64 = counts.iter().sum();
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if task.depth >= config.max_depth || total < config.min_samples_split || pure {
            nodes[task.node] = Node::Leaf { class_counts: counts };
            continue;
        }
        let stats = NodeStats {
            y,
            weights,
            counts,
            total,
        };
        let mut best: Option<Best> = None;

        if let Some(s) = sampler.as_mut() {
            present.clear();
            for &i in &task.samples {
                sample_mark[i as usize] = task.node;
                for &(j, _) in x[i as usize].entries() {
                    if feature_mark[j as usize] != task.node {
                        feature_mark[j as usize] = task.node;
                        present.push(j);
                    }
                }
            }
            chosen.clear();
            let mut drawn = 0;
            while chosen.len() < s.max_features && drawn < present.len() {
                let pick = s.rng.gen_range(drawn..present.len());
                present.swap(drawn, pick);
                let f = present[drawn];
                drawn += 1;
                let mut col: Vec<(f64, u32)> = s.columns[f as usize]
                    .iter()
                    .filter(|(i, _)| sample_mark[*i as usize] == task.node)
                    .map(|&(i, v)| (v, i))
                    .collect();
                col.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
                if stats.varies(&col) {
                    chosen.push((f, col));
                }
            }
            chosen.sort_unstable_by_key(|c| c.0);
            for (f, col) in &chosen {
                stats.sweep(*f, col, &mut left, &mut best);
            }
        } else {
            triples.clear();
            for &i in &task.samples {
                triples.extend(x[i as usize].entries().iter().map(|&(j, v)| (j, v, i)));
            }
            triples.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
            for group in triples.chunk_by(|a, b| a.0 == b.0) {
                entries.clear();
                entries.extend(group.iter().map(|t| (t.1, t.2)));
                if stats.varies(&entries) {
                    stats.sweep(group[0].0, &entries, &mut left, &mut best);
                }
            }
        }

        let Some(best) = best else {
            nodes[task.node] = Node::Leaf {
                class_counts: stats.counts,
            };
            continue;
        };
        let (l, r): (Vec<u32>, Vec<u32>) = task
            .samples
            .iter()
            .partition(|&&i| x[i as usize].get(best.feature) <= best.threshold);
        let (li, ri) = (nodes.len(), nodes.len() + 1);
        nodes.push(Node::Leaf {
            class_counts: Vec::new(),
        });
        nodes.push(Node::Leaf {
            class_counts: Vec::new(),
        });
        nodes[task.node] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: li,
            right: ri,
        };
        stack.push(Task {
            node: ri,
            samples: r,
            depth: task.depth + 1,
        });
        stack.push(Task {
            node: li,
            samples: l,
            depth: task.depth + 1,
        });
    }
    TreeModel {
        nodes,
        config: *config,
        criterion: "gini".into(),
        num_classes: k,
        dim,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(d: &[f64]) -> SparseVector {
        SparseVector::from_dense(d).unwrap()
    }

    #[test]
    fn xor_is_learned() {
        let x = vec![sv(&[0.0, 0.0]), sv(&[0.0, 1.0]), sv(&[1.0, 0.0]), sv(&[1.0, 1.0])];
        let y = vec![0, 1, 1, 0];
        let cfg = TreeConfig {
            max_depth: 2,
            min_samples_split: 2,
        };
        let m = fit_tree(&x, &y, 2, &cfg).unwrap();
        assert_eq!(m.predict(&x).unwrap(), y);
        assert_eq!(m.depth(), 2);
        // every root split has zero gain, so the lowest feature wins
        assert!(matches!(m.nodes[0], Node::Split { feature: 0, .. }));
    }

    #[test]
    fn pure_input_is_a_single_leaf() {
        let x = vec![sv(&[1.0]), sv(&[2.0]), sv(&[3.0])];
        let m = fit_tree(&x, &[1, 1, 1], 1, &TreeConfig::default()).unwrap();
        assert_eq!(m.nodes.len(), 1);
        assert_eq!(m.predict(&x).unwrap(), vec![1, 1, 1]);
    }

    #[test]
    fn threshold_is_a_midpoint() {
        let x = vec![sv(&[1.0]), sv(&[2.0]), sv(&[4.0]), sv(&[6.0])];
        let cfg = TreeConfig {
            max_depth: 1,
            min_samples_split: 2,
        };
        let m = fit_tree(&x, &[0, 0, 1, 1], 1, &cfg).unwrap();
        assert!(matches!(m.nodes[0], Node::Split { threshold, .. } if threshold == 3.0));
    }

    #[test]
    fn implicit_zeros_take_part_in_the_sweep() {
        // feature 0 is absent (zero) for class 0 and negative/positive for class 1
        let x = vec![sv(&[0.0, 1.0]), sv(&[0.0, 1.0]), sv(&[-1.0, 1.0]), sv(&[-2.0, 1.0])];
        let cfg = TreeConfig {
            max_depth: 1,
            min_samples_split: 2,
        };
        let m = fit_tree(&x, &[0, 0, 1, 1], 2, &cfg).unwrap();
        assert_eq!(m.predict(&x).unwrap(), vec![0, 0, 1, 1]);
        assert!(matches!(m.nodes[0], Node::Split { feature: 0, threshold, .. } if threshold == -0.5));
    }

    #[test]
    fn depth_and_min_split_are_respected() {
        let x: Vec<_> = (0..40).map(|i| sv(&[i as f64, (i * 7 % 11) as f64])).collect();
        let y: Vec<usize> = (0..40).map(|i| (i * 13 % 5 < 2) as usize).collect();
        for max_depth in [0, 1, 3, 5] {
            let cfg = TreeConfig {
                max_depth,
                min_samples_split: 2,
            };
            assert!(fit_tree(&x, &y, 2, &cfg).unwrap().depth() <= max_depth);
        }
        let m = fit_tree(&x, &y, 2, &TreeConfig::default()).unwrap();
        for n in &m.nodes {
            if let Node::Leaf { class_counts } = n {
                let total: u64 = class_counts.iter().sum();
                let pure = class_counts.iter().filter(|&&c| c > 0).count() == 1;
                assert!(pure || total < 5);
            }
        }
    }
}
