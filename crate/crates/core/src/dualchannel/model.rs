use std::ops::Range;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tokenizer::TokenizerHash;
use super::sigmoid;
use crate::hashing::derive_seed;
use crate::{Error, Result};

pub const DC_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionMode {
    /// Two scalars `w1`, `w2`.
    Scalar,
    /// One weight per pooled dimension and channel.
    PerDim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channels {
    Dual,
    /// Only the code-mixed encoder; `z = w1 · h_cm`.
    CodeMixedOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub max_length: usize,
    pub dim: usize,
    pub fusion: FusionMode,
    pub channels: Channels,
    pub dropout: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            vocab_size: 1 << 15,
            max_length: 128,
            dim: 32,
            fusion: FusionMode::Scalar,
            channels: Channels::Dual,
            dropout: 0.1,
        }
    }
}

/// Parameter groups, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    EmbCm,
    ProjCmW,
    ProjCmB,
    EmbEn,
    ProjEnW,
    ProjEnB,
    FusionW1,
    FusionW2,
    FfnW1,
    FfnB1,
    FfnW2,
    FfnB2,
}

impl Group {
    pub const ALL: [Group; 12] = [
        Group::EmbCm,
        Group::ProjCmW,
        Group::ProjCmB,
        Group::EmbEn,
        Group::ProjEnW,
        Group::ProjEnB,
        Group::FusionW1,
        Group::FusionW2,
        Group::FfnW1,
        Group::FfnB1,
        Group::FfnW2,
        Group::FfnB2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Group::EmbCm => "emb_cm",
            Group::ProjCmW => "proj_cm_w",
            Group::ProjCmB => "proj_cm_b",
            Group::EmbEn => "emb_en",
            Group::ProjEnW => "proj_en_w",
            Group::ProjEnB => "proj_en_b",
            Group::FusionW1 => "fusion_w1",
            Group::FusionW2 => "fusion_w2",
            Group::FfnW1 => "ffn_w1",
            Group::FfnB1 => "ffn_b1",
            Group::FfnW2 => "ffn_w2",
            Group::FfnB2 => "ffn_b2",
        }
    }

    pub fn from_name(name: &str) -> Option<Group> {
        Group::ALL.into_iter().find(|g| g.name() == name)
    }

    fn is_english(self) -> bool {
        matches!(self, Group::EmbEn | Group::ProjEnW | Group::ProjEnB | Group::FusionW2)
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        TokenizerHash::new(self.vocab_size, self.max_length)?;
        if self.dim == 0 {
            return Err(Error::InvalidArgument("model dimension must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidArgument(format!("dropout must lie in [0, 1), got {}", self.dropout)));
        }
        Ok(())
    }

    pub fn tokenizer(&self) -> TokenizerHash {
        TokenizerHash {
            vocab_size: self.vocab_size,
            max_length: self.max_length,
        }
    }

    pub fn group_len(&self, g: Group) -> usize {
        if self.channels == Channels::CodeMixedOnly && g.is_english() {
            return 0;
        }
        let (v, d) = (self.vocab_size, self.dim);
        match g {
            Group::EmbCm | Group::EmbEn => v * d,
            Group::ProjCmW | Group::ProjEnW | Group::FfnW1 => d * d,
            Group::ProjCmB | Group::ProjEnB | Group::FfnB1 | Group::FfnW2 => d,
            Group::FusionW1 | Group::FusionW2 => match self.fusion {
                FusionMode::Scalar => 1,
                FusionMode::PerDim => d,
            },
            Group::FfnB2 => 1,
        }
    }

    pub fn range(&self, g: Group) -> Range<usize> {
        let start: usize = Group::ALL
            .iter()
            .take_while(|&&x| x != g)
            .map(|&x| self.group_len(x))
            .sum();
        start..start + self.group_len(g)
    }

    pub fn num_params(&self) -> usize {
        Group::ALL.iter().map(|&g| self.group_len(g)).sum()
    }
}

/// One training or evaluation example: token ids of both channels and the
/// class index (0 = Not-Hope, 1 = Hope).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub ids_cm: Vec<u32>,
    pub ids_en: Vec<u32>,
    pub label: usize,
}

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    pub mean_cm: Vec<f64>,
    pub h_cm: Vec<f64>,
    pub mean_en: Vec<f64>,
    pub h_en: Vec<f64>,
    pub z: Vec<f64>,
    /// Hidden pre-activation.
    pub u: Vec<f64>,
    /// Dropout scale per hidden unit: 0 or `1/(1-rate)`; `None` at inference.
    pub mask: Option<Vec<f64>>,
    pub logit: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualChannelModel {
    pub config: ModelConfig,
    pub params: Vec<f64>,
}

fn affine_tanh(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let d = b.len();
    (0..d)
        .map(|i| {
            let row = &w[i * d..(i + 1) * d];
            (b[i] + row.iter().zip(x).map(|(a, c)| a * c).sum::<f64>()).tanh()
        })
        .collect()
}

impl DualChannelModel {
    /// All parameters zero: every pooled output is 0 and `p = 0.5`.
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        Ok(DualChannelModel {
            config,
            params: vec![0.0; config.num_params()],
        })
    }

    /// Training initialization. Embeddings are uniform in `(-1, 1)`, dense
    /// matrices Glorot-uniform, biases zero and fusion weights 0.5. The
    /// output layer starts at zero so the initial prediction is exactly 0.5.
    /// Each group draws from its own stream, `derive_seed(seed,
    /// "dc.init.<group>")`.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        let mut m = Self::zeros(config)?;
        let glorot = (6.0 / (2 * config.dim) as f64).sqrt();
        for g in Group::ALL {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("dc.init.{}", g.name())));
            let slot = m.group_mut(g);
            match g {
                Group::EmbCm | Group::EmbEn => slot.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0)),
                Group::ProjCmW | Group::ProjEnW | Group::FfnW1 => {
                    slot.iter_mut().for_each(|v| *v = rng.gen_range(-glorot..glorot))
                }
                Group::FusionW1 | Group::FusionW2 => slot.fill(0.5),
                _ => {}
            }
        }
        Ok(m)
    }

    /// Every parameter uniform in `(-scale, scale)`; used for gradient checks.
    pub fn random(config: ModelConfig, seed: u64, scale: f64) -> Result<Self> {
        let mut m = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "dc.random"));
        m.params.iter_mut().for_each(|v| *v = rng.gen_range(-scale..scale));
        Ok(m)
    }

    pub fn group(&self, g: Group) -> &[f64] {
        &self.params[self.config.range(g)]
    }

    pub fn group_mut(&mut self, g: Group) -> &mut [f64] {
        let r = self.config.range(g);
        &mut self.params[r]
    }

    pub fn set_group(&mut self, g: Group, value: f64) {
        self.group_mut(g).fill(value);
    }

    pub fn tokenizer(&self) -> TokenizerHash {
        self.config.tokenizer()
    }

    /// The code-mixed channel alone, with the same encoder, `w1` and head.
    pub fn single_channel_submodel(&self) -> DualChannelModel {
        let config = ModelConfig {
            channels: Channels::CodeMixedOnly,
            ..self.config
        };
        let mut m = DualChannelModel {
            config,
            params: vec![0.0; config.num_params()],
        };
        for g in Group::ALL {
            if config.group_len(g) > 0 {
                m.group_mut(g).copy_from_slice(self.group(g));
            }
        }
        m
    }

    fn check_ids(&self, ids: &[u32]) -> Result<()> {
        match ids.iter().find(|&&i| i as usize >= self.config.vocab_size) {
            Some(&id) => Err(Error::TokenOutOfRange {
                id,
                vocab: self.config.vocab_size,
            }),
            None => Ok(()),
        }
    }

    fn mean_embedding(&self, emb: Group, ids: &[u32]) -> Vec<f64> {
        let d = self.config.dim;
        let table = self.group(emb);
        let mut mean = vec![0.0; d];
        for &id in ids {
            let row = &table[id as usize * d..(id as usize + 1) * d];
            mean.iter_mut().zip(row).for_each(|(m, r)| *m += r);
        }
        if !ids.is_empty() {
            let n = ids.len() as f64;
            mean.iter_mut().for_each(|m| *m /= n);
        }
        mean
    }

    fn encode_channel(&self, emb: Group, w: Group, b: Group, ids: &[u32]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_ids(ids)?;
        let mean = self.mean_embedding(emb, ids);
        let h = affine_tanh(self.group(w), self.group(b), &mean);
        Ok((mean, h))
    }

    /// Pooled output of the code-mixed encoder.
    pub fn encode_cm(&self, ids: &[u32]) -> Result<Vec<f64>> {
        Ok(self.encode_channel(Group::EmbCm, Group::ProjCmW, Group::ProjCmB, ids)?.1)
    }

    /// Pooled output of the translated-text encoder.
    pub fn encode_en(&self, ids: &[u32]) -> Result<Vec<f64>> {
        if self.config.channels == Channels::CodeMixedOnly {
            return Err(Error::InvalidArgument("model has no English channel".into()));
        }
        Ok(self.encode_channel(Group::EmbEn, Group::ProjEnW, Group::ProjEnB, ids)?.1)
    }

    fn fusion_weight(&self, g: Group, j: usize) -> f64 {
        let w = self.group(g);
        if w.len() == 1 {
            w[0]
        } else {
            w[j]
        }
    }

    /// Full forward pass. `mask` holds per-hidden-unit dropout scales.
    pub fn forward(&self, ids_cm: &[u32], ids_en: &[u32], mask: Option<Vec<f64>>) -> Result<ForwardCache> {
        let d = self.config.dim;
        let (mean_cm, h_cm) = self.encode_channel(Group::EmbCm, Group::ProjCmW, Group::ProjCmB, ids_cm)?;
        let dual = self.config.channels == Channels::Dual;
        let (mean_en, h_en) = if dual {
            self.encode_channel(Group::EmbEn, Group::ProjEnW, Group::ProjEnB, ids_en)?
        } else {
            (Vec::new(), Vec::new())
        };
        let z: Vec<f64> = (0..d)
            .map(|j| {
                let a = self.fusion_weight(Group::FusionW1, j) * h_cm[j];
                if dual {
                    a + self.fusion_weight(Group::FusionW2, j) * h_en[j]
                } else {
                    a
                }
            })
            .collect();
        let (w1, b1) = (self.group(Group::FfnW1), self.group(Group::FfnB1));
        let u: Vec<f64> = (0..d)
            .map(|i| b1[i] + w1[i * d..(i + 1) * d].iter().zip(&z).map(|(a, c)| a * c).sum::<f64>())
            .collect();
        let w2 = self.group(Group::FfnW2);
        let mut logit = self.group(Group::FfnB2)[0];
        for i in 0..d {
            let r = u[i].max(0.0) * mask.as_ref().map_or(1.0, |m| m[i]);
            logit += w2[i] * r;
        }
        if !logit.is_finite() {
            return Err(Error::NonFinite("dual-channel logit".into()));
        }
        Ok(ForwardCache {
            mean_cm,
            h_cm,
            mean_en,
            h_en,
            z,
            u,
            mask,
            logit,
            p: sigmoid(logit),
        })
    }

    /// Probability of the Hope class, without dropout.
    pub fn predict_proba(&self, ids_cm: &[u32], ids_en: &[u32]) -> Result<f64> {
        Ok(self.forward(ids_cm, ids_en, None)?.p)
    }

    /// Accumulates `d_logit · ∂logit/∂θ` into `grad` (same layout as
    /// `params`).
    pub fn backward(&self, ids_cm: &[u32], ids_en: &[u32], c: &ForwardCache, d_logit: f64, grad: &mut [f64]) {
        let cfg = &self.config;
        let d = cfg.dim;
        let scale = |i: usize| c.mask.as_ref().map_or(1.0, |m| m[i]);

        grad[cfg.range(Group::FfnB2).start] += d_logit;
        let w2 = self.group(Group::FfnW2);
        let gw2 = cfg.range(Group::FfnW2).start;
        let mut du = vec![0.0; d];
        for i in 0..d {
            let active = c.u[i] > 0.0;
            grad[gw2 + i] += d_logit * c.u[i].max(0.0) * scale(i);
            if active {
                du[i] = d_logit * w2[i] * scale(i);
            }
        }

        let w1 = self.group(Group::FfnW1);
        let (gw1, gb1) = (cfg.range(Group::FfnW1).start, cfg.range(Group::FfnB1).start);
        let mut dz = vec![0.0; d];
        for i in 0..d {
            if du[i] == 0.0 {
                continue;
            }
            grad[gb1 + i] += du[i];
            for j in 0..d {
                grad[gw1 + i * d + j] += du[i] * c.z[j];
                dz[j] += w1[i * d + j] * du[i];
            }
        }

        let fuse = |g: Group, h: &[f64], grad: &mut [f64]| -> Vec<f64> {
            let start = cfg.range(g).start;
            let per_dim = cfg.group_len(g) > 1;
            (0..d)
                .map(|j| {
                    grad[start + if per_dim { j } else { 0 }] += dz[j] * h[j];
                    dz[j] * self.fusion_weight(g, j)
                })
                .collect()
        };
        let dh_cm = fuse(Group::FusionW1, &c.h_cm, grad);
        let dh_en = (cfg.channels == Channels::Dual).then(|| fuse(Group::FusionW2, &c.h_en, grad));

        self.backward_channel(
            [Group::EmbCm, Group::ProjCmW, Group::ProjCmB],
            ids_cm,
            &c.mean_cm,
            &c.h_cm,
            &dh_cm,
            grad,
        );
        if let Some(dh_en) = dh_en {
            self.backward_channel(
                [Group::EmbEn, Group::ProjEnW, Group::ProjEnB],
                ids_en,
                &c.mean_en,
                &c.h_en,
                &dh_en,
                grad,
            );
        }
    }

    fn backward_channel(&self, groups: [Group; 3], ids: &[u32], mean: &[f64], h: &[f64], dh: &[f64], grad: &mut [f64]) {
        let cfg = &self.config;
        let d = cfg.dim;
        let [emb, w, b] = groups;
        let wm = self.group(w);
        let (gw, gb, ge) = (cfg.range(w).start, cfg.range(b).start, cfg.range(emb).start);
        let mut dmean = vec![0.0; d];
        for i in 0..d {
            let da = dh[i] * (1.0 - h[i] * h[i]);
            if da == 0.0 {
                continue;
            }
            grad[gb + i] += da;
            for j in 0..d {
                grad[gw + i * d + j] += da * mean[j];
                dmean[j] += wm[i * d + j] * da;
            }
        }
        if ids.is_empty() {
            return;
        }
        let n = ids.len() as f64;
        for &id in ids {
            let row = ge + id as usize * d;
            for j in 0..d {
                grad[row + j] += dmean[j] / n;
            }
        }
    }

    /// Mean BCE over `batch` and its gradient, without dropout.
    pub fn loss_and_grad(&self, batch: &[Example]) -> Result<(f64, Vec<f64>)> {
        let mut grad = vec![0.0; self.params.len()];
        let n = batch.len() as f64;
        let mut loss = 0.0;
        for ex in batch {
            let c = self.forward(&ex.ids_cm, &ex.ids_en, None)?;
            loss += super::bce_loss(c.p, ex.label);
            self.backward(&ex.ids_cm, &ex.ids_en, &c, (c.p - ex.label as f64) / n, &mut grad);
        }
        Ok((loss / n, grad))
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct File<'a> {
            version: u32,
            model_kind: &'static str,
            #[serde(flatten)]
            model: &'a DualChannelModel,
        }
        Ok(serde_json::to_string(&File {
            version: DC_FORMAT_VERSION,
            model_kind: "dc",
            model: self,
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct File {
            version: u32,
            model_kind: String,
            config: ModelConfig,
            params: Vec<f64>,
        }
        let f: File = serde_json::from_str(s)?;
        if f.version != DC_FORMAT_VERSION {
            return Err(Error::Version {
                kind: "dual-channel model",
                found: f.version,
                expected: DC_FORMAT_VERSION,
            });
        }
        if f.model_kind != "dc" {
            return Err(Error::InvalidArgument(format!("expected a dc model, found {}", f.model_kind)));
        }
        f.config.validate()?;
        if f.params.len() != f.config.num_params() {
            return Err(Error::DimensionMismatch {
                expected: f.config.num_params(),
                found: f.params.len(),
            });
        }
        Ok(DualChannelModel {
            config: f.config,
            params: f.params,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}
