use std::collections::BTreeSet;

use serde::Serialize;

use super::model::{DualChannelModel, Example, Group};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Largest relative error per parameter group.
    pub per_group: Vec<(String, f64)>,
    pub checked: usize,
}

/// Floor of the relative-error denominator. Central differences carry
/// roughly `1e-16 / epsilon` of rounding noise, so gradients far below this
/// floor are compared in absolute terms.
const DENOM_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(DENOM_FLOOR)
}

/// Compares the hand-derived gradient of the mean BCE over `batch` with
/// central differences of step `epsilon`, dropout off.
///
/// Every parameter is checked except embedding rows: of those only the rows
/// of tokens in the batch plus one untouched row (whose gradient is exactly
/// zero) are probed.
pub fn grad_check(model: &DualChannelModel, batch: &[Example], epsilon: f64) -> Result<GradCheckReport> {
    let (_, analytic) = model.loss_and_grad(batch)?;
    let cfg = model.config;
    let d = cfg.dim;
    let mut probe = model.clone();
    let mut per_group = Vec::new();
    let mut max = 0.0f64;
    let mut checked = 0;
    for g in Group::ALL {
        let range = cfg.range(g);
        if range.is_empty() {
            continue;
        }
        let indices: Vec<usize> = match g {
            Group::EmbCm | Group::EmbEn => {
                let mut rows: BTreeSet<u32> = batch
                    .iter()
                    .flat_map(|e| if g == Group::EmbCm { &e.ids_cm } else { &e.ids_en })
                    .copied()
                    .collect();
                if let Some(free) = (0..cfg.vocab_size as u32).find(|r| !rows.contains(r)) {
                    rows.insert(free);
                }
                rows.iter()
                    .flat_map(|&r| (0..d).map(move |j| range.start + r as usize * d + j))
                    .collect()
            }
            _ => range.clone().collect(),
        };
        let mut worst = 0.0f64;
        for i in indices {
            let orig = probe.params[i];
            probe.params[i] = orig + epsilon;
            let up = probe.loss_and_grad_value(batch)?;
            probe.params[i] = orig - epsilon;
            let down = probe.loss_and_grad_value(batch)?;
            probe.params[i] = orig;
            let numeric = (up - down) / (2.0 * epsilon);
            worst = worst.max(relative_error(analytic[i], numeric));
            checked += 1;
        }
        per_group.push((g.name().to_string(), worst));
        max = max.max(worst);
    }
    Ok(GradCheckReport {
        max_rel_error: max,
        per_group,
        checked,
    })
}

impl DualChannelModel {
    fn loss_and_grad_value(&self, batch: &[Example]) -> Result<f64> {
        let mut total = 0.0;
        for e in batch {
            total += super::bce_loss(self.forward(&e.ids_cm, &e.ids_en, None)?.p, e.label);
        }
        Ok(total / batch.len() as f64)
    }
}
