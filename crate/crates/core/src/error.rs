use thiserror::Error;

/// Errors produced anywhere in the solver.
#[derive(Debug, Error)]
pub enum NqsError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configured size cap (basis dimension, parameter count) was exceeded.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Input parsed but violates a structural requirement (e.g. non-Hermitian).
    #[error("validation error: {0}")]
    Validation(String),

    /// The linear-method pencil had no admissible eigenpair.
    #[error("linear method step failed: {0}")]
    LmStep(String),

    /// A dense or iterative linear-algebra routine failed.
    #[error("solver error: {0}")]
    Solver(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, NqsError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(NqsError::Domain(msg.into()))
}
