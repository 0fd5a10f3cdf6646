use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{DualChannelModel, Example, Group};
use super::optim::{adamw_step, AdamState, AdamW};
use super::translate::TranslationProvider;
use super::{bce_loss, tokenizer::TokenizerHash};
use crate::corpus::{Dataset, Label};
use crate::hashing::derive_indexed_seed;
use crate::metrics::{Averaging, ConfusionMatrix};
use crate::{Error, Result};

/// Optimization settings. The dropout rate lives in the model config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub weight_decay: f64,
    pub seed: u64,
    /// Groups left untouched by the optimizer (no update, no decay).
    pub frozen: Vec<Group>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            learning_rate: 2e-3,
            epochs: 10,
            weight_decay: 0.01,
            seed: 0,
            frozen: Vec::new(),
        }
    }
}

impl TrainConfig {
    /// The fine-tuning learning rate used with pretrained encoders, 2e-5.
    /// Far too small for randomly initialized desk-scale encoders.
    pub fn fine_tuning_preset() -> Self {
        TrainConfig {
            learning_rate: 2e-5,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if ![32, 64, 128].contains(&self.batch_size) {
            return Err(Error::InvalidArgument(format!(
                "batch size must be 32, 64 or 128, got {}",
                self.batch_size
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::InvalidArgument("weight decay must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean training BCE over the epoch, dropout active.
    pub train_loss: f64,
    /// NaN when there is no dev set.
    pub dev_weighted_f1: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: DualChannelModel,
    pub history: Vec<EpochRecord>,
    /// Epoch whose parameters were returned; 0 means the initialization.
    pub best_epoch: usize,
}

/// Hope-class decisions at threshold 0.5 (exactly 0.5 is Not-Hope).
pub fn predict_labels(model: &DualChannelModel, examples: &[Example]) -> Result<Vec<usize>> {
    examples
        .par_iter()
        .map(|e| Ok(usize::from(model.predict_proba(&e.ids_cm, &e.ids_en)? > 0.5)))
        .collect()
}

fn weighted_f1(model: &DualChannelModel, examples: &[Example]) -> Result<f64> {
    let pred = predict_labels(model, examples)?;
    let truth: Vec<usize> = examples.iter().map(|e| e.label).collect();
    Ok(ConfusionMatrix::from_predictions(&truth, &pred, &Label::CLASS_NAMES)?
        .averages(Averaging::Weighted)
        .f1)
}

/// Trains with shuffled minibatches and returns the parameters of the epoch
/// with the best dev weighted F1 (the earliest on ties; the last epoch when
/// `dev` is empty).
///
/// Shuffling uses `derive_indexed_seed(seed, "dc.shuffle", epoch)` and the
/// dropout masks of optimizer step `t` use `derive_indexed_seed(seed,
/// "dc.dropout", t)`, drawn example by example in batch order.
pub fn train(init: DualChannelModel, train: &[Example], dev: &[Example], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if let Some(e) = train.iter().chain(dev).find(|e| e.label > 1) {
        return Err(Error::InvalidArgument(format!("label {} is not binary", e.label)));
    }
    let mut model = init.clone();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best = (init, 0usize, f64::NEG_INFINITY);
    if cfg.epochs == 0 || train.is_empty() {
        return Ok(TrainOutcome {
            model: best.0,
            history,
            best_epoch: 0,
        });
    }

    let n_params = model.params.len();
    let active: Option<Vec<bool>> = (!cfg.frozen.is_empty()).then(|| {
        let mut a = vec![true; n_params];
        for &g in &cfg.frozen {
            a[model.config.range(g)].fill(false);
        }
        a
    });
    let opt = AdamW::new(cfg.learning_rate, cfg.weight_decay);
    let mut state = AdamState::new(n_params);
    let mut grad = vec![0.0; n_params];
    let rate = model.config.dropout;
    let keep_scale = 1.0 / (1.0 - rate);
    let d = model.config.dim;
    let mut step = 0u64;

    for epoch in 1..=cfg.epochs {
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_indexed_seed(
            cfg.seed,
            "dc.shuffle",
            epoch as u64,
        )));
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_indexed_seed(cfg.seed, "dc.dropout", step));
            grad.fill(0.0);
            let scale = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for &i in batch {
                let ex = &train[i];
                let mask = (rate > 0.0).then(|| {
                    (0..d)
                        .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep_scale })
                        .collect()
                });
                let c = model.forward(&ex.ids_cm, &ex.ids_en, mask).map_err(|_| Error::Divergence {
                    epoch,
                    step: step as usize,
                })?;
                batch_loss += bce_loss(c.p, ex.label);
                model.backward(&ex.ids_cm, &ex.ids_en, &c, (c.p - ex.label as f64) * scale, &mut grad);
            }
            if !batch_loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    step: step as usize,
                });
            }
            total += batch_loss;
            adamw_step(&opt, &mut model.params, &grad, &mut state, active.as_deref()).map_err(|_| {
                Error::Divergence {
                    epoch,
                    step: step as usize,
                }
            })?;
            step += 1;
        }
        let train_loss = total / train.len() as f64;
        let dev_weighted_f1 = if dev.is_empty() {
            f64::NAN
        } else {
            weighted_f1(&model, dev)?
        };
        log::info!("epoch {epoch}: train loss {train_loss:.6}, dev weighted F1 {dev_weighted_f1:.4}");
        history.push(EpochRecord {
            epoch,
            train_loss,
            dev_weighted_f1,
        });
        if !dev.is_empty() && dev_weighted_f1 > best.2 {
            best = (model.clone(), epoch, dev_weighted_f1);
        }
    }
    if dev.is_empty() {
        best = (model, cfg.epochs, f64::NAN);
    }
    Ok(TrainOutcome {
        model: best.0,
        history,
        best_epoch: best.1,
    })
}

/// `epoch,train_loss,dev_weighted_f1` with a header line.
pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,train_loss,dev_weighted_f1\n");
    for r in history {
        let _ = writeln!(out, "{},{},{}", r.epoch, r.train_loss, r.dev_weighted_f1);
    }
    out
}

/// Tokenizes both channels of every comment. A comment without a stored
/// translation is sent through `provider`; when that yields no translation
/// the comment's own text fills the English channel. Returns the examples
/// and the number of such identity fallbacks.
pub fn encode_dataset(
    d: &Dataset,
    tokenizer: &TokenizerHash,
    provider: &mut TranslationProvider,
) -> Result<(Vec<Example>, usize)> {
    let labels = d.class_indices()?;
    let mut fallbacks = 0;
    let mut out = Vec::with_capacity(d.len());
    for (c, label) in d.comments().iter().zip(labels) {
        let english = match &c.translation {
            Some(t) => t.clone(),
            None => {
                let (t, translated) = provider.translate_flagged(&c.text);
                if !translated {
                    fallbacks += 1;
                }
                t
            }
        };
        out.push(Example {
            ids_cm: tokenizer.encode(&c.text),
            ids_en: tokenizer.encode(&english),
            label,
        });
    }
    if fallbacks > 0 {
        log::warn!("{fallbacks} of {} comments use their own text as translation", d.len());
    }
    Ok((out, fallbacks))
}

#[cfg(test)]
mod tests {
    use super::super::model::{Channels, FusionMode, ModelConfig};
    use super::*;

    fn small() -> ModelConfig {
        ModelConfig {
            vocab_size: 64,
            max_length: 16,
            dim: 8,
            fusion: FusionMode::Scalar,
            channels: Channels::Dual,
            dropout: 0.1,
        }
    }

    fn toy(n: usize) -> Vec<Example> {
        (0..n)
            .map(|i| {
                let label = i % 2;
                let base = if label == 1 { 32 } else { 0 };
                Example {
                    ids_cm: vec![base + (i % 7) as u32, base + (i % 5) as u32 + 10],
                    ids_en: vec![base + (i % 3) as u32 + 20],
                    label,
                }
            })
            .collect()
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let init = DualChannelModel::init(small(), 1).unwrap();
        let cfg = TrainConfig {
            epochs: 0,
            ..Default::default()
        };
        let out = train(init.clone(), &toy(10), &toy(4), &cfg).unwrap();
        assert_eq!(out.model, init);
        assert!(out.history.is_empty());
    }

    #[test]
    fn training_is_deterministic_and_learns() {
        let data = toy(64);
        let cfg = TrainConfig {
            epochs: 30,
            learning_rate: 1e-2,
            ..Default::default()
        };
        let run = || train(DualChannelModel::init(small(), 3).unwrap(), &data, &data, &cfg).unwrap();
        let (a, b) = (run(), run());
        assert_eq!(a.model, b.model);
        assert_eq!(history_csv(&a.history), history_csv(&b.history));
        assert!(a.history.last().unwrap().train_loss < a.history[0].train_loss);
        assert!(a.history.iter().any(|r| r.dev_weighted_f1 > 0.9));
    }

    #[test]
    fn frozen_group_does_not_move() {
        let data = toy(32);
        let mut init = DualChannelModel::init(small(), 0).unwrap();
        init.set_group(Group::FusionW2, 0.0);
        let cfg = TrainConfig {
            epochs: 3,
            frozen: vec![Group::FusionW2],
            ..Default::default()
        };
        let out = train(init, &data, &[], &cfg).unwrap();
        assert_eq!(out.model.group(Group::FusionW2), &[0.0]);
        assert_eq!(out.best_epoch, 3);
    }

    #[test]
    fn history_format() {
        let h = [EpochRecord {
            epoch: 1,
            train_loss: 0.5,
            dev_weighted_f1: 0.25,
        }];
        assert_eq!(history_csv(&h), "epoch,train_loss,dev_weighted_f1\n1,0.5,0.25\n");
    }

    #[test]
    fn rejects_unlisted_batch_size() {
        let cfg = TrainConfig {
            batch_size: 10,
            ..Default::default()
        };
        assert!(train(DualChannelModel::init(small(), 0).unwrap(), &toy(4), &[], &cfg).is_err());
    }
}
