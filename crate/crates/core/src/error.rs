use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CknError {
    /// Inputs outside the admissible parameter region.
    #[error("domain error: {0}")]
    Domain(String),

    /// Grid sizes or shapes that an operator cannot work with.
    #[error("grid error: {0}")]
    Grid(String),

    /// A field that must be strictly positive is not.
    #[error("positivity violated: {0}")]
    Positivity(String),

    /// An iterative method failed to reach its tolerance.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// Feature not available for this sphere dimension.
    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, CknError>;

impl From<std::io::Error> for CknError {
    fn from(e: std::io::Error) -> Self {
        CknError::Io(e.to_string())
    }
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(CknError::Domain(msg.into()))
}
