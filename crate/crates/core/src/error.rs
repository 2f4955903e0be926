use thiserror::Error;

/// Errors raised by the library. Every variant maps onto one CLI exit code,
/// see [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric (max |m_ij - m_ji| = {0:e})")]
    NotSymmetric(f64),

    #[error("symmetric eigensolver did not converge on a {0}x{0} operator")]
    NoConvergence(usize),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("search failed: {0}")]
    SearchFailed(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::DimensionMismatch { .. } | Error::NotSymmetric(_) => 2,
            Error::Hypothesis(_) => 3,
            Error::SearchFailed(_) => 5,
            Error::NoConvergence(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
