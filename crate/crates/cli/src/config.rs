//! Flat `key = value` run configuration.
//!
//! Every key has a built-in default. A value is taken from, in increasing
//! precedence: the default, the `--config` file, the environment variable
//! `KANHOPE_<KEY>` (key uppercased, `.` replaced by `_`), and finally
//! command-line flags (`--set key=value` or a dedicated flag).

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{Context, Result};
use kanhope::classifiers::{ForestConfig, LogRegConfig, MaxFeatures, TreeConfig};
use kanhope::corpus::{LabelMap, SplitSpec};
use kanhope::dualchannel::{Channels, FusionMode, Group, ModelConfig, TrainConfig};
use kanhope::experiment::{BaselineParams, FeatureSettings};
use kanhope::features::Analyzer;
use serde::{Deserialize, Serialize};

use crate::Invalid;

/// `(key, default, description)` for every recognised key.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("seeds", "", "comma-separated seeds to train; empty means the --seed value"),
    ("labels.map", "", "extra label spellings, e.g. `Non_hope=Not-Hope,Hope_speech=Hope`"),
    ("preprocess.clean", "true", "clean comment text before features and training"),
    ("split.fractions", "0.8,0.1,0.1", "train,dev,test fractions"),
    ("split.stratified", "true", "keep class proportions in every part"),
    ("split.keep", "Not-Hope,Hope", "labels kept before splitting"),
    ("features.ngram", "1,5", "smallest and largest n-gram length"),
    ("features.min_df", "1", "minimum document frequency"),
    ("features.analyzer", "word", "word or char"),
    ("lr.c", "0.1", "inverse L2 regularization strength"),
    ("lr.tol", "0.0001", "gradient-norm stopping tolerance"),
    ("lr.max_iter", "20000", "iteration cap"),
    ("nb.alpha", "1.0", "additive smoothing"),
    ("knn.k", "3", "neighbours"),
    ("knn.p", "2", "Minkowski power"),
    ("tree.max_depth", "800", "depth limit"),
    ("tree.min_samples_split", "5", "smallest node that may split"),
    ("forest.n_trees", "100", "trees"),
    ("forest.max_features", "sqrt", "sqrt, all or a count"),
    ("forest.max_depth", "none", "depth limit of each tree"),
    ("forest.min_samples_split", "2", "smallest node that may split"),
    ("forest.bootstrap", "true", "resample rows per tree"),
    ("dc.vocab", "32768", "hashed vocabulary size (power of two)"),
    ("dc.max_length", "128", "tokens kept per text"),
    ("dc.dim", "32", "encoder width"),
    ("dc.fusion", "scalar", "scalar or per_dim fusion weights"),
    ("dc.channels", "dual", "dual or code_mixed_only"),
    ("dc.dropout", "0.1", "dropout on the hidden layer"),
    ("dc.batch_size", "32", "32, 64 or 128"),
    ("dc.learning_rate", "0.002", "AdamW step size"),
    ("dc.epochs", "10", "training epochs"),
    ("dc.weight_decay", "0.01", "decoupled weight decay"),
    ("dc.freeze", "", "parameter groups excluded from updates, e.g. fusion_w2"),
    ("translate.mode", "identity", "identity, cache or http"),
    ("translate.cache", "", "tab-separated translation cache file"),
    ("translate.url", "", "translation endpoint for http mode"),
    ("translate.timeout_secs", "10", "per-request timeout"),
];

fn is_key(key: &str) -> bool {
    KEYS.iter().any(|(k, _, _)| *k == key)
}

pub fn env_var(key: &str) -> String {
    format!("KANHOPE_{}", key.to_uppercase().replace('.', "_"))
}

fn parse_file(text: &str, origin: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Invalid(format!("{origin}:{}: expected `key = value`", n + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn defaults() -> Self {
        RunConfig {
            values: KEYS
                .iter()
                .map(|(k, v, _)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }

    pub fn resolve(file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut cfg = Self::defaults();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            for (k, v) in parse_file(&text, &path.display().to_string())? {
                cfg.set(&k, v)?;
            }
        }
        for (k, _, _) in KEYS {
            if let Ok(v) = std::env::var(env_var(k)) {
                cfg.set(k, v)?;
            }
        }
        for (k, v) in overrides {
            cfg.set(k, v.clone())?;
        }
        Ok(cfg)
    }

    /// A recorded configuration, checked against the known keys.
    pub fn from_map(values: BTreeMap<String, String>) -> Result<Self> {
        let mut cfg = Self::defaults();
        for (k, v) in values {
            cfg.set(&k, v)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: String) -> Result<()> {
        if !is_key(key) {
            return Err(Invalid(format!("unknown config key {key:?}")).into());
        }
        self.values.insert(key.to_string(), value);
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_default()
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.get(key);
        raw.trim()
            .parse()
            .map_err(|e| Invalid(format!("config key {key} = {raw:?}: {e}")).into())
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.get(key);
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|e| Invalid(format!("config key {key} = {raw:?}: {e}")).into())
            })
            .collect()
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn seeds(&self, fallback: u64) -> Result<Vec<u64>> {
        let seeds: Vec<u64> = self.list("seeds")?;
        Ok(if seeds.is_empty() { vec![fallback] } else { seeds })
    }

    pub fn label_map(&self) -> Result<LabelMap> {
        LabelMap::with_overrides(self.get("labels.map")).map_err(|e| Invalid(e.to_string()).into())
    }

    pub fn split_spec(&self, seed: u64) -> Result<SplitSpec> {
        let f: Vec<f64> = self.list("split.fractions")?;
        let [train_fraction, dev_fraction, test_fraction] = f[..] else {
            return Err(Invalid(format!("split.fractions needs three values, got {}", f.len())).into());
        };
        Ok(SplitSpec {
            train_fraction,
            dev_fraction,
            test_fraction,
            seed,
            stratified: self.parse("split.stratified")?,
        })
    }

    pub fn features(&self) -> Result<FeatureSettings> {
        let n: Vec<usize> = self.list("features.ngram")?;
        let n_range = match n[..] {
            [a] => (a, a),
            [a, b] => (a, b),
            _ => return Err(Invalid("features.ngram takes one or two lengths".into()).into()),
        };
        let analyzer = match self.get("features.analyzer") {
            "word" => Analyzer::Word,
            "char" => Analyzer::Char,
            other => return Err(Invalid(format!("features.analyzer {other:?} is not word or char")).into()),
        };
        Ok(FeatureSettings {
            n_range,
            min_df: self.parse("features.min_df")?,
            analyzer,
        })
    }

    pub fn baseline_params(&self) -> Result<BaselineParams> {
        let max_features = match self.get("forest.max_features") {
            "sqrt" => MaxFeatures::Sqrt,
            "all" => MaxFeatures::All,
            _ => MaxFeatures::Count(self.parse("forest.max_features")?),
        };
        let forest_depth = match self.get("forest.max_depth") {
            "none" | "" => usize::MAX,
            _ => self.parse("forest.max_depth")?,
        };
        Ok(BaselineParams {
            logreg: LogRegConfig {
                c: self.parse("lr.c")?,
                tol: self.parse("lr.tol")?,
                max_iter: self.parse("lr.max_iter")?,
            },
            nb_alpha: self.parse("nb.alpha")?,
            knn_k: self.parse("knn.k")?,
            knn_p: self.parse("knn.p")?,
            tree: TreeConfig {
                max_depth: self.parse("tree.max_depth")?,
                min_samples_split: self.parse("tree.min_samples_split")?,
            },
            forest: ForestConfig {
                n_trees: self.parse("forest.n_trees")?,
                tree: TreeConfig {
                    max_depth: forest_depth,
                    min_samples_split: self.parse("forest.min_samples_split")?,
                },
                max_features,
                bootstrap: self.parse("forest.bootstrap")?,
                seed: 0,
            },
        })
    }

    pub fn dc_model(&self) -> Result<ModelConfig> {
        let fusion = match self.get("dc.fusion") {
            "scalar" => FusionMode::Scalar,
            "per_dim" => FusionMode::PerDim,
            other => return Err(Invalid(format!("dc.fusion {other:?} is not scalar or per_dim")).into()),
        };
        let channels = match self.get("dc.channels") {
            "dual" => Channels::Dual,
            "code_mixed_only" => Channels::CodeMixedOnly,
            other => return Err(Invalid(format!("dc.channels {other:?} is not dual or code_mixed_only")).into()),
        };
        let cfg = ModelConfig {
            vocab_size: self.parse("dc.vocab")?,
            max_length: self.parse("dc.max_length")?,
            dim: self.parse("dc.dim")?,
            fusion,
            channels,
            dropout: self.parse("dc.dropout")?,
        };
        cfg.validate().map_err(|e| Invalid(e.to_string()))?;
        Ok(cfg)
    }

    pub fn dc_train(&self, seed: u64) -> Result<TrainConfig> {
        let frozen = self
            .list::<String>("dc.freeze")?
            .iter()
            .map(|name| Group::from_name(name).ok_or_else(|| Invalid(format!("unknown parameter group {name:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let cfg = TrainConfig {
            batch_size: self.parse("dc.batch_size")?,
            learning_rate: self.parse("dc.learning_rate")?,
            epochs: self.parse("dc.epochs")?,
            weight_decay: self.parse("dc.weight_decay")?,
            seed,
            frozen,
        };
        cfg.validate().map_err(|e| Invalid(e.to_string()))?;
        Ok(cfg)
    }

    #[cfg(test)]
    pub fn to_file_text(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "# baseline\nlr.c = 1.0\nknn.k=5\n").unwrap();
        let cfg = RunConfig::resolve(Some(&path), &[("knn.k".into(), "7".into())]).unwrap();
        assert_eq!(cfg.get("lr.c"), "1.0");
        assert_eq!(cfg.get("knn.k"), "7");
        assert_eq!(cfg.get("nb.alpha"), "1.0");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::defaults().set("lr.cc", "1".into()).unwrap_err();
        assert!(err.downcast_ref::<Invalid>().is_some());
    }

    #[test]
    fn defaults_build_every_section() {
        let cfg = RunConfig::defaults();
        assert_eq!(cfg.split_spec(0).unwrap().sizes(6_176), [4_940, 618, 618]);
        assert_eq!(cfg.features().unwrap(), FeatureSettings::default());
        assert_eq!(cfg.baseline_params().unwrap(), BaselineParams::default());
        assert_eq!(cfg.dc_model().unwrap(), ModelConfig::default());
        assert_eq!(cfg.dc_train(3).unwrap(), TrainConfig { seed: 3, ..TrainConfig::default() });
        assert_eq!(cfg.seeds(4).unwrap(), vec![4]);
        assert_eq!(env_var("lr.max_iter"), "KANHOPE_LR_MAX_ITER");
    }

    #[test]
    fn round_trips_through_file_text() {
        let mut cfg = RunConfig::defaults();
        cfg.set("dc.freeze", "fusion_w2".into()).unwrap();
        let back = parse_file(&cfg.to_file_text(), "x").unwrap();
        assert_eq!(RunConfig::from_map(back.into_iter().collect()).unwrap(), cfg);
    }
}
