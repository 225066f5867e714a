use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("family mismatch: {0}")]
    FamilyMismatch(String),
    #[error("operation not supported: {0}")]
    Unsupported(String),
    #[error("window budget exceeded: more than {budget} vertices")]
    BudgetExceeded { budget: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("bad descriptor `{input}`: {reason}")]
    Descriptor { input: String, reason: String },
    #[error("element not in window: {0}")]
    OutOfWindow(String),
    #[error("not enough usable targets for a fit: {found} < {needed}")]
    InsufficientTargets { found: usize, needed: usize },
    #[error("matrix is not symmetric (max deviation {0:e})")]
    Asymmetric(f64),
    #[error("missing pair value for ({0}, {1})")]
    MissingPair(usize, usize),
    #[error("crofton calibration failed: {0}")]
    Calibration(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn descriptor_error(input: &str, reason: impl Into<String>) -> Error {
    Error::Descriptor {
        input: input.to_string(),
        reason: reason.into(),
    }
}
