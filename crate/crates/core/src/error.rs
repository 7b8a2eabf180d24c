use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid spec field `{field}`: {reason}")]
    InvalidSpec { field: String, reason: String },

    #[error("not a contraction: true factor {true_factor} exceeds declared lambda {lambda}")]
    NotAContraction { true_factor: f64, lambda: f64 },

    #[error("spectral norm estimate did not converge after {iterations} iterations (best estimate {estimate})")]
    SpectralNormNotConverged { estimate: f64, iterations: usize },

    #[error("witness {index} is not an element of the omega set")]
    InvalidWitness { index: usize },

    #[error("unsupported instance: {0}")]
    UnsupportedInstance(String),

    #[error("malformed {what}: {reason}")]
    Format { what: &'static str, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn spec(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidSpec {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
