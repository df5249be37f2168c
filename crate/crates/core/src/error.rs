use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for dimension {dim}")]
    OutOfRange { index: usize, dim: usize },

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("truncation too small: {0}")]
    TruncationTooSmall(String),

    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("unphysical parameters: {0}")]
    Unphysical(String),

    #[error("block decomposition invalid: {0}")]
    DecompositionInvalid(String),

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("optimizer stalled: {0}")]
    Stalled(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("non-orthonormal basis: {0}")]
    NonOrthonormal(String),

    #[error("degenerate post-selection: success probability {0:e}")]
    DegeneratePostselection(f64),

    #[error("missing input: {0}")]
    Missing(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema { path: path.into(), message: message.into() }
    }

    /// Whether the error stems from user-supplied configuration rather than numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Schema { .. }
                | Error::Missing(_)
                | Error::Parse(_)
                | Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
                | Error::TruncationTooSmall(_)
                | Error::InvalidDimension(_)
                | Error::DimensionMismatch(_)
                | Error::Unphysical(_)
        )
    }
}
