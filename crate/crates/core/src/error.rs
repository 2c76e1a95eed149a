use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The configuration document could not be parsed.
    #[error("config parse error: {0}")]
    Parse(String),

    /// A configuration value violates one of its invariants.
    #[error("invalid config: `{field}` {reason}")]
    Invalid { field: String, reason: String },

    /// Derived physical rates are non-finite or degenerate.
    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    /// `K + iΩI` could not be inverted to working precision.
    #[error("singular response matrix at Ω = {omega} rad/s (residual {residual:e})")]
    SingularResponse { omega: f64, residual: f64 },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    /// A covariance matrix violates the uncertainty principle.
    #[error("unphysical covariance: {0}")]
    Unphysical(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    Argument(String),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
