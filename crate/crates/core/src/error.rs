use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A reservoir state became non-finite.
    #[error("non-finite reservoir state in layer {layer} at step {step}")]
    Overflow { layer: usize, step: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("system is numerically rank deficient (rank {rank} of {dim})")]
    NumericalRank { rank: usize, dim: usize },

    /// A parameter failed validation. `name` is the user-facing parameter
    /// (CLI flag or field name).
    #[error("invalid value for {name}: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("objective returned {value} at {point:?}")]
    NonFiniteObjective { value: f64, point: Vec<f64> },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
