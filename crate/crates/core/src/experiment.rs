//! Baseline experiment: TF-IDF features, the five classical classifiers and
//! seed-averaged evaluation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifiers::{
    fit_forest, fit_knn, fit_logreg, fit_nb, fit_tree, Classifier, ClassifierModel, ForestConfig, LogRegConfig,
    TreeConfig,
};
use crate::corpus::{Dataset, Label};
use crate::features::{fit_texts, Analyzer, TfidfModel};
use crate::metrics::{ConfusionMatrix, EvalReport, RunMeta};
use crate::sparse::SparseVector;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Lr,
    Nb,
    Knn,
    Tree,
    Forest,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 5] = [
        BaselineKind::Lr,
        BaselineKind::Knn,
        BaselineKind::Tree,
        BaselineKind::Forest,
        BaselineKind::Nb,
    ];

    pub fn code(self) -> &'static str {
        match self {
            BaselineKind::Lr => "lr",
            BaselineKind::Nb => "nb",
            BaselineKind::Knn => "knn",
            BaselineKind::Tree => "tree",
            BaselineKind::Forest => "forest",
        }
    }

    /// Name used as the model column in reports.
    pub fn display_name(self) -> &'static str {
        match self {
            BaselineKind::Lr => "Logistic Regression",
            BaselineKind::Nb => "Naive Bayes",
            BaselineKind::Knn => "K-Nearest Neighbour",
            BaselineKind::Tree => "Decision Tree",
            BaselineKind::Forest => "Random Forest",
        }
    }

    /// Whether the fitted model depends on the seed.
    pub fn is_randomized(self) -> bool {
        self == BaselineKind::Forest
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.code() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown classifier {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureSettings {
    pub n_range: (usize, usize),
    pub min_df: usize,
    pub analyzer: Analyzer,
}

impl Default for FeatureSettings {
    fn default() -> Self {
        FeatureSettings {
            n_range: (1, 5),
            min_df: 1,
            analyzer: Analyzer::Word,
        }
    }
}

/// Hyperparameters of all five baselines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineParams {
    pub logreg: LogRegConfig,
    pub nb_alpha: f64,
    pub knn_k: usize,
    pub knn_p: f64,
    pub tree: TreeConfig,
    /// `seed` is overridden by the run seed.
    pub forest: ForestConfig,
}

impl Default for BaselineParams {
    fn default() -> Self {
        BaselineParams {
            logreg: LogRegConfig::default(),
            nb_alpha: 1.0,
            knn_k: 3,
            knn_p: 2.0,
            tree: TreeConfig::default(),
            forest: ForestConfig::default(),
        }
    }
}

pub fn fit_features(train: &Dataset, settings: &FeatureSettings) -> Result<TfidfModel> {
    let texts: Vec<&str> = train.comments().iter().map(|c| c.text.as_str()).collect();
    fit_texts(&texts, settings.n_range, settings.min_df, settings.analyzer)
}

/// Feature vectors and class indices of a Hope/Not-Hope dataset.
pub fn vectorize(model: &TfidfModel, d: &Dataset) -> Result<(Vec<SparseVector>, Vec<usize>)> {
    let y = d.class_indices()?;
    let texts: Vec<&str> = d.comments().iter().map(|c| c.text.as_str()).collect();
    Ok((model.transform_texts(&texts), y))
}

pub fn fit_baseline(
    kind: BaselineKind,
    x: &[SparseVector],
    y: &[usize],
    dim: usize,
    params: &BaselineParams,
    seed: u64,
) -> Result<ClassifierModel> {
    Ok(match kind {
        BaselineKind::Lr => ClassifierModel::Lr(fit_logreg(x, y, dim, &params.logreg)?),
        BaselineKind::Nb => ClassifierModel::Nb(fit_nb(x, y, dim, params.nb_alpha)?),
        BaselineKind::Knn => ClassifierModel::Knn(fit_knn(x, y, dim, params.knn_k, params.knn_p)?),
        BaselineKind::Tree => ClassifierModel::Tree(fit_tree(x, y, dim, &params.tree)?),
        BaselineKind::Forest => ClassifierModel::Forest(fit_forest(
            x,
            y,
            dim,
            &ForestConfig {
                seed,
                ..params.forest
            },
        )?),
    })
}

/// Confusion matrix of `model` on `(x, y)` over the Not-Hope/Hope classes.
pub fn confusion_of(model: &(impl Classifier + Sync), x: &[SparseVector], y: &[usize]) -> Result<ConfusionMatrix> {
    let pred = model.predict(x)?;
    ConfusionMatrix::from_predictions(y, &pred, &Label::CLASS_NAMES)
}

/// Fits every requested baseline on `train`, evaluates on `test` and
/// returns one report per (model, seed). Seed-independent models are
/// fitted once; their single report lists every seed.
pub fn run_baselines(
    train: &Dataset,
    test: &Dataset,
    features: &FeatureSettings,
    params: &BaselineParams,
    kinds: &[BaselineKind],
    seeds: &[u64],
) -> Result<Vec<EvalReport>> {
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("at least one seed is required".into()));
    }
    let tfidf = fit_features(train, features)?;
    let (x_train, y_train) = vectorize(&tfidf, train)?;
    let (x_test, y_test) = vectorize(&tfidf, test)?;
    let dim = tfidf.vocab_size();
    let mut reports = Vec::new();
    for &kind in kinds {
        let runs: Vec<Vec<u64>> = if kind.is_randomized() {
            seeds.iter().map(|&s| vec![s]).collect()
        } else {
            vec![seeds.to_vec()]
        };
        for run_seeds in runs {
            let started = std::time::Instant::now();
            let model = fit_baseline(kind, &x_train, &y_train, dim, params, run_seeds[0])?;
            let m = confusion_of(&model, &x_test, &y_test)?;
            log::info!("{} (seeds {:?}): {:.1?}", kind.display_name(), run_seeds, started.elapsed());
            reports.push(EvalReport::from_matrix(&m, RunMeta::now(kind.display_name(), run_seeds))?);
        }
    }
    Ok(reports)
}
