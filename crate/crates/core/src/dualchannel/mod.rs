//! Dual-channel fusion classifier.
//!
//! One encoder reads the code-mixed comment, a second reads its English
//! translation. Each encoder mean-pools hashed-token embeddings and applies a
//! dense layer with `tanh`; the two pooled vectors are combined by a learned
//! weighted sum and passed through a one-hidden-layer ReLU network with a
//! sigmoid output:
//!
//! ```text
//! h_cm = tanh(W_cm · mean(E_cm[ids_cm]) + b_cm)
//! h_en = tanh(W_en · mean(E_en[ids_en]) + b_en)
//! z    = w1 · h_cm + w2 · h_en
//! p    = σ(w_out · dropout(relu(W_h · z + b_h)) + b_out)
//! ```
//!
//! Training minimizes mean binary cross-entropy with AdamW. Gradients are
//! derived by hand and checked against central differences by
//! [`grad_check`].

mod gradcheck;
mod model;
mod optim;
mod synthetic;
mod tokenizer;
mod train;
mod translate;

pub use gradcheck::{grad_check, GradCheckReport};
pub use model::{
    Channels, DualChannelModel, Example, ForwardCache, FusionMode, Group, ModelConfig, DC_FORMAT_VERSION,
};
pub use optim::{adamw_step, AdamState, AdamW};
pub use synthetic::separable_set;
pub use tokenizer::TokenizerHash;
pub use train::{encode_dataset, history_csv, predict_labels, train, EpochRecord, TrainConfig, TrainOutcome};
pub use translate::{unescape_field, escape_field, TranslationMode, TranslationProvider};

/// Logistic function, evaluated without overflow for any finite input.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub const PROB_CLAMP: f64 = 1e-7;

/// Binary cross-entropy of probability `p` for label `y`, with `p` clamped
/// to `[1e-7, 1 - 1e-7]`.
pub fn bce_loss(p: f64, y: usize) -> f64 {
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    if y == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

pub fn mean_bce(pairs: impl IntoIterator<Item = (f64, usize)>) -> f64 {
    let (sum, n) = pairs
        .into_iter()
        .fold((0.0, 0usize), |(s, n), (p, y)| (s + bce_loss(p, y), n + 1));
    sum / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(2.0) - 0.880_797_08).abs() < 1e-8);
        for x in [-500.0, -30.0, -1.5, 0.3, 7.0, 500.0] {
            let s = sigmoid(x);
            assert!(s.is_finite() && (0.0..=1.0).contains(&s));
            assert!((sigmoid(-x) - (1.0 - s)).abs() < 1e-15);
        }
    }

    #[test]
    fn bce_values() {
        let ln2 = std::f64::consts::LN_2;
        assert!((bce_loss(0.5, 0) - ln2).abs() < 1e-15);
        assert!((bce_loss(0.5, 1) - ln2).abs() < 1e-15);
        let at_one = bce_loss(1.0, 1);
        assert!(at_one.is_finite() && at_one < 2e-7);
        assert!(bce_loss(0.0, 1).is_finite());
        let m = mean_bce([(0.9, 1), (0.1, 0)]);
        assert!((m - 0.105_360_5).abs() < 1e-6);
    }
}
