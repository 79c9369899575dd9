use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: mismatched dimensions, unknown names, bad bounds.
    #[error("configuration error: {0}")]
    Config(String),

    /// Requested something the implementation does not support (e.g. derivative order > 2).
    #[error("capability error: {0}")]
    Capability(String),

    /// A non-finite value showed up in a numerical computation.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Input outside the admissible domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Quantity is undefined for the given inputs (e.g. relative error with zero reference norm).
    #[error("undefined: {0}")]
    Undefined(String),

    /// Time integration produced a non-finite state.
    #[error("divergence at step {step}")]
    Divergence { step: usize },

    /// Landscape directions are collinear or zero.
    #[error("degenerate directions: {0}")]
    DegenerateDirections(String),

    /// Malformed record in a data file.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
