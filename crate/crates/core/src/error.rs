use thiserror::Error;

/// Errors raised by bundle construction and fiberwise operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("operands live on different measure spaces")]
    SpaceMismatch,

    #[error("fiber kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: String, found: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degree budget exceeded: result needs degree {needed}, budget is {budget}")]
    DegreeBudget { needed: usize, budget: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid measure space: {0}")]
    InvalidSpace(String),

    #[error("matrix is not Hermitian (residual {0:e})")]
    NotHermitian(f64),

    /// A per-atom invariant failed; `atom` is the atom id.
    #[error("at atom {atom}: {reason}")]
    AtAtom { atom: String, reason: String },

    #[error("{0} is not supported for this fiber kind")]
    Unsupported(&'static str),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn at_atom(atom: &str, reason: impl Into<String>) -> Self {
        Error::AtAtom {
            atom: atom.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
