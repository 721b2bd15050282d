//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// Malformed input text (JSON bodies, plans, scripts, view files).
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// A value violates the document model (depth, non-finite float, empty
    /// field name, bad timestamp, ...).
    #[error("invalid value: {0}")]
    InvalidValue(String),

    /// A dataset directory is inconsistent with its manifest.
    #[error("storage error: {0}")]
    Storage(String),

    #[error("unknown provider: {0}")]
    UnknownProvider(String),

    #[error("provider {provider} has kind {actual}, operation needs {expected}")]
    KindMismatch {
        provider: String,
        expected: String,
        actual: String,
    },

    #[error("subscription already active for provider {0}")]
    DuplicateSubscription(String),

    #[error("subscription ended: {0}")]
    SubscriptionEnded(String),

    #[error("dataset mismatch: expected {expected}, got {got}")]
    DatasetMismatch { expected: String, got: String },

    #[error("unknown attribute path: {0}")]
    UnknownPath(String),

    #[error("policy denied document {document} ({detail})")]
    PolicyDenied { document: String, detail: String },

    /// A plan, roster, ruleset, or config file is structurally invalid.
    #[error("plan error: {0}")]
    Plan(String),

    #[error("http error: {0}")]
    Http(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wraps a serde_json error, keeping its stated position.
    pub fn from_json(err: &serde_json::Error) -> Self {
        Error::Parse {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}
