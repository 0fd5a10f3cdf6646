//! L2-regularized logistic regression.
//!
//! Minimizes `C·Σ logloss(σ(w·x+b), y) + ½‖w‖²` (bias unregularized) by
//! full-batch gradient descent with a backtracking (Armijo) line search,
//! starting from `w = 0, b = 0`. The step length carries over between
//! iterations and is allowed to grow by 2× before each search, which keeps
//! plain gradient descent usable on poorly scaled TF-IDF problems.

use serde::{Deserialize, Serialize};

use super::{check_training_set, class_counts, Classifier};
use crate::dualchannel::sigmoid;
use crate::sparse::SparseVector;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegConfig {
    /// Inverse regularization strength.
    pub c: f64,
    /// Stop once the gradient's Euclidean norm falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            c: 0.1,
            tol: 1e-4,
            max_iter: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub train_config: LogRegConfig,
    /// Iterations actually run and the final gradient norm.
    pub iterations: usize,
    pub grad_norm: f64,
}

impl LinearModel {
    pub fn decision(&self, x: &SparseVector) -> f64 {
        x.dot_dense(&self.weights) + self.bias
    }
}

impl Classifier for LinearModel {
    fn num_classes(&self) -> usize {
        2
    }

    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn proba_unchecked(&self, x: &SparseVector) -> Vec<f64> {
        let p = sigmoid(self.decision(x));
        vec![1.0 - p, p]
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

struct Problem<'a> {
    x: &'a [SparseVector],
    y: Vec<f64>,
    c: f64,
}

impl Problem<'_> {
    fn margins(&self, w: &[f64], b: f64) -> Vec<f64> {
        self.x.iter().map(|x| x.dot_dense(w) + b).collect()
    }

    fn objective(&self, w: &[f64], margins: &[f64]) -> f64 {
        let loss: f64 = margins
            .iter()
            .zip(&self.y)
            .map(|(&z, &y)| softplus(z) - y * z)
            .sum();
        self.c * loss + 0.5 * w.iter().map(|v| v * v).sum::<f64>()
    }

    fn gradient(&self, w: &[f64], margins: &[f64], gw: &mut [f64]) -> f64 {
        gw.copy_from_slice(w);
        let mut gb = 0.0;
        for ((x, &z), &y) in self.x.iter().zip(margins).zip(&self.y) {
            let r = self.c * (sigmoid(z) - y);
            gb += r;
            for &(j, v) in x.entries() {
                gw[j as usize] += r * v;
            }
        }
        gb
    }
}

pub fn fit_logreg(
    x: &[SparseVector],
    y: &[usize],
    dim: usize,
    config: &LogRegConfig,
) -> Result<LinearModel> {
    fit_logreg_traced(x, y, dim, config).map(|(m, _)| m)
}

/// Like [`fit_logreg`], also returning the objective after every iteration
/// (index 0 is the objective at the zero initialization).
pub fn fit_logreg_traced(
    x: &[SparseVector],
    y: &[usize],
    dim: usize,
    config: &LogRegConfig,
) -> Result<(LinearModel, Vec<f64>)> {
    let k = check_training_set(x, y, dim)?;
    if k != 2 {
        return Err(Error::InvalidArgument(
            "logistic regression is binary; labels must be 0 or 1".into(),
        ));
    }
    if class_counts(y, 2).contains(&0) {
        return Err(Error::SingleClass);
    }
    if !(config.c > 0.0 && config.c.is_finite()) {
        return Err(Error::InvalidArgument(format!("C must be positive, got {}", config.c)));
    }
    let problem = Problem {
        x,
        y: y.iter().map(|&c| c as f64).collect(),
        c: config.c,
    };
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut margins = problem.margins(&w, b);
    let mut f = problem.objective(&w, &margins);
    let mut trace = vec![f];
    let mut gw = vec![0.0; dim];
    let mut step = 1.0;
    let mut iterations = 0;
    let mut grad_norm;
    let mut w_new = vec![0.0; dim];
    loop {
        let gb = problem.gradient(&w, &margins, &mut gw);
        let g2 = gw.iter().map(|g| g * g).sum::<f64>() + gb * gb;
        grad_norm = g2.sqrt();
        if grad_norm <= config.tol || iterations >= config.max_iter {
            break;
        }
        step *= 2.0;
        let (f_new, b_new, margins_new) = loop {
            for ((wn, &wi), &g) in w_new.iter_mut().zip(&w).zip(&gw) {
                *wn = wi - step * g;
            }
            let b_new = b - step * gb;
            let m = problem.margins(&w_new, b_new);
            let f_new = problem.objective(&w_new, &m);
            if f_new <= f - 1e-4 * step * g2 {
                break (f_new, b_new, m);
            }
            step *= 0.5;
            if step < 1e-20 {
                // no representable decrease left; the point is optimal to
                // working precision
                break (f, b, margins.clone());
            }
        };
        if step < 1e-20 {
            break;
        }
        std::mem::swap(&mut w, &mut w_new);
        b = b_new;
        margins = margins_new;
        f = f_new;
        trace.push(f);
        iterations += 1;
    }
    log::debug!("logreg: {iterations} iterations, |grad| = {grad_norm:.3e}");
    Ok((
        LinearModel {
            weights: w,
            bias: b,
            c: config.c,
            train_config: *config,
            iterations,
            grad_norm,
        },
        trace,
    ))
}
