use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index {index} out of range for {what} of size {len}")]
    OutOfRange { what: &'static str, index: usize, len: usize },

    #[error("temporal correlation matrix cannot be factored: {0}")]
    Factorization(String),

    #[error("training schedule is not orthogonal (max Gram deviation {0:.3e})")]
    NonOrthogonalTraining(f64),

    #[error("cascaded channel is identically zero")]
    DegenerateChannel,

    #[error("combiner vector has zero norm")]
    ZeroCombiner,

    #[error("unknown sweep axis `{0}`")]
    UnknownAxis(String),

    #[error("experiment precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
