//! Hope-speech classification toolkit for code-mixed Kannada-English text.
//!
//! The crate covers the whole experimental pipeline:
//!
//! * [`corpus`]: loading, label filtering, stratified splitting and corpus statistics
//! * [`preprocess`]: text cleaning, per-token script tagging and code-mixing typology
//! * [`agreement`]: Krippendorff's alpha (nominal) over incomplete annotation tables
//! * [`features`]: tokenization and TF-IDF weighted n-gram sparse vectors
//! * [`classifiers`]: logistic regression, multinomial naive Bayes, k-nearest
//!   neighbours, CART decision trees and random forests over sparse vectors
//! * [`dualchannel`]: a two-encoder fusion classifier that reads the code-mixed
//!   text and its English translation side by side
//! * [`metrics`]: confusion matrices, per-class precision/recall/F1 and
//!   macro/weighted averages
//!
//! ```
//! use kanhope::metrics::{ConfusionMatrix, Averaging};
//!
//! let m = ConfusionMatrix::from_counts(vec![vec![327, 63], vec![88, 140]], &["Not-Hope", "Hope"]).unwrap();
//! let weighted = m.averages(Averaging::Weighted);
//! assert!((weighted.f1 - 0.752).abs() < 1e-3);
//! assert!((m.accuracy().unwrap() - 0.756).abs() < 1e-3);
//! ```

pub mod agreement;
pub mod classifiers;
pub mod corpus;
pub mod dualchannel;
mod error;
pub mod experiment;
pub mod features;
pub mod hashing;
pub mod metrics;
pub mod preprocess;
pub mod sparse;

pub use error::{Error, Result};
