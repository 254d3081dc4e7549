use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its documented domain.
    #[error("{what} out of domain: {detail}")]
    Domain { what: &'static str, detail: String },

    /// Malformed input data (tables, configs, files).
    #[error("validation failed: {0}")]
    Validation(String),

    /// A size limit was exceeded.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Quadrature, factorization or fit failed.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Weights admit no exponential (tanh) representation.
    #[error("degenerate weights: {0}")]
    DegenerateWeights(String),

    /// A partition function that must be nonzero vanished.
    #[error("degenerate partition function: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            what,
            detail: detail.into(),
        }
    }

    /// True for errors caused by bad input rather than by the computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. } | Error::Validation(_) | Error::Capacity(_) | Error::Io(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
