use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("row {row}: {message}")]
    MalformedRow { row: u64, message: String },

    #[error("row {row}: unknown label {label:?}")]
    UnknownLabel { row: u64, label: String },

    #[error("row {row}: invalid UTF-8")]
    NonUtf8 { row: u64 },

    #[error("duplicate id {0}")]
    DuplicateId(u64),

    #[error("{0} produced an empty result")]
    EmptyResult(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("vocabulary is empty after min_df filtering (min_df = {min_df})")]
    EmptyVocabulary { min_df: usize },

    #[error("dimension mismatch: model expects {expected} features, input has index {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("training data contains a single class")]
    SingleClass,

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("krippendorff's alpha is undefined: {0}")]
    UndefinedAlpha(String),

    #[error("training diverged at epoch {epoch}, step {step}")]
    Divergence { epoch: usize, step: usize },

    #[error("token id {id} out of range for vocabulary of size {vocab}")]
    TokenOutOfRange { id: u32, vocab: usize },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("unsupported {kind} version {found} (expected {expected})")]
    Version {
        kind: &'static str,
        found: u32,
        expected: u32,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from invalid user input rather than a failure
    /// while running an otherwise valid request.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Io { .. } | Error::Divergence { .. } | Error::NonFinite(_)
        )
    }
}
