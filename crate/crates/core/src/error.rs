use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative method failed to converge within its budget.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A channel model violates its structural invariants.
    #[error("model error: {0}")]
    Model(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
