use thiserror::Error;

/// Errors raised by grid construction, spectral transforms, and the flow.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A conformal factor lost strict positivity. Carries the offending
    /// minimum and its grid location so the caller can report where the
    /// lower bound failed.
    #[error("positivity loss: min value {min:.6e} at (theta, phi) = ({theta:.6}, {phi:.6})")]
    PositivityLoss { min: f64, theta: f64, phi: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
