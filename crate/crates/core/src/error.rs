use alloc::string::String;

/// Errors raised anywhere in the estimation pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Malformed or inconsistent input data.
    #[error("invalid input: {0}")]
    Input(String),
    /// The model specification or formula cannot be used.
    #[error("invalid model specification: {0}")]
    Specification(String),
    /// A matrix that must be inverted is singular. `column` is the first
    /// column found to be linearly dependent on the preceding ones.
    #[error("singular matrix: column {column} ({name}) is linearly dependent on earlier columns")]
    Singular {
        /// Zero-based column index.
        column: usize,
        /// Term label of the column.
        name: String,
    },
    /// Cholesky factorization failed even after adding the largest jitter.
    #[error("matrix is not positive semi-definite (factorization failed with jitter up to {max_jitter:e})")]
    NotPositiveSemiDefinite {
        /// Largest diagonal jitter that was tried.
        max_jitter: f64,
    },
    /// The fit has not converged, so its output cannot be used downstream.
    #[error("model fit did not converge: {0}")]
    NotConverged(String),
}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
