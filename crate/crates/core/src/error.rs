use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the attack library.
#[derive(Debug, Error)]
pub enum StbaError {
    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dataset format error: {0}")]
    Format(String),

    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },

    #[error("model spec parse error at {path}: {message}")]
    ModelParse { path: String, message: String },

    /// `layer` is 1-based.
    #[error("model spec dimension error in layer {layer}: {message}")]
    ModelDimension { layer: usize, message: String },

    #[error("model spec validation error: {0}")]
    ModelValidation(String),

    #[error("query budget exhausted ({used}/{limit})")]
    BudgetExhausted { used: usize, limit: usize },

    #[error("oracle transport error: {0}")]
    Transport(String),

    #[error("missing saved adversarial: {}", .0.display())]
    MissingAdversarial(PathBuf),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("image codec error: {0}")]
    Codec(#[from] image::ImageError),
}

impl StbaError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        StbaError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(expected: impl std::fmt::Debug, actual: impl std::fmt::Debug) -> Self {
        StbaError::ShapeMismatch {
            expected: format!("{expected:?}"),
            actual: format!("{actual:?}"),
        }
    }
}

pub type Result<T, E = StbaError> = std::result::Result<T, E>;
