use thiserror::Error;

/// Errors raised by every fallible operation in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input failed a structural or numerical invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// Operands have incompatible shapes.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A linear program has no feasible point.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// The simplex exceeded its pivot budget.
    #[error("linear program did not terminate after {0} pivots")]
    IterationLimit(usize),

    /// The operation does not apply to this input (e.g. an element that is
    /// already Lipschitz has no rescaling factor).
    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// Every sampled direction was degenerate.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
