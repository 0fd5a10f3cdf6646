use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// AdamW moments and step count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamW {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamW {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        AdamW {
            lr,
            weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One AdamW update of `params[i]` for every `i` where `active[i]` holds
/// (all when `active` is `None`):
///
/// ```text
/// θ ← θ − lr·m̂/(√v̂ + eps) − lr·wd·θ
/// ```
///
/// Moments are bias-corrected by `1 − βᵗ`; the decay term uses θ from
/// before the step.
pub fn adamw_step(
    opt: &AdamW,
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    active: Option<&[bool]>,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() || state.m.len() != state.v.len() {
        return Err(Error::DimensionMismatch {
            expected: params.len(),
            found: grads.len(),
        });
    }
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!("gradient entry {i}")));
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - opt.beta1.powi(t);
    let c2 = 1.0 - opt.beta2.powi(t);
    for i in 0..params.len() {
        if active.is_some_and(|a| !a[i]) {
            continue;
        }
        let g = grads[i];
        let m = opt.beta1 * state.m[i] + (1.0 - opt.beta1) * g;
        let v = opt.beta2 * state.v[i] + (1.0 - opt.beta2) * g * g;
        state.m[i] = m;
        state.v[i] = v;
        let theta = params[i];
        params[i] = theta - opt.lr * (m / c1) / ((v / c2).sqrt() + opt.eps) - opt.lr * opt.weight_decay * theta;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        let opt = AdamW::new(0.01, 0.0);
        let mut p = vec![1.0, -2.0, 0.5];
        let mut s = AdamState::new(3);
        adamw_step(&opt, &mut p, &[3.0, -0.2, 1e-3], &mut s, None).unwrap();
        let moved = [1.0 - p[0], -2.0 - p[1], 0.5 - p[2]];
        assert!((moved[0] - 0.01).abs() < 1e-8);
        assert!((moved[1] + 0.01).abs() < 1e-8);
        assert!((moved[2] - 0.01).abs() < 1e-4);
    }

    #[test]
    fn zero_gradient_is_pure_decay() {
        let opt = AdamW::new(0.1, 0.01);
        let mut p = vec![2.0, -4.0];
        let mut s = AdamState::new(2);
        adamw_step(&opt, &mut p, &[0.0, 0.0], &mut s, None).unwrap();
        assert_eq!(p, vec![2.0 * (1.0 - 0.1 * 0.01), -4.0 * (1.0 - 0.1 * 0.01)]);
    }

    #[test]
    fn frozen_entries_stay_put() {
        let opt = AdamW::new(0.1, 0.5);
        let mut p = vec![1.0, 1.0];
        let mut s = AdamState::new(2);
        adamw_step(&opt, &mut p, &[1.0, 1.0], &mut s, Some(&[true, false])).unwrap();
        assert_ne!(p[0], 1.0);
        assert_eq!(p[1], 1.0);
    }

    #[test]
    fn deterministic_and_rejects_nan() {
        let run = || {
            let opt = AdamW::new(0.05, 0.01);
            let mut p = vec![0.3, -0.7];
            let mut s = AdamState::new(2);
            for k in 0..10 {
                let g = [p[0] * k as f64, (p[1] - 1.0).sin()];
                adamw_step(&opt, &mut p, &g, &mut s, None).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
        let mut s = AdamState::new(1);
        assert!(adamw_step(&AdamW::new(0.1, 0.0), &mut [0.0], &[f64::NAN], &mut s, None).is_err());
    }
}
