use thiserror::Error;

/// Errors raised by the lattice, image and learning routines.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Operands or arguments violate a precondition.
    #[error("input error: {0}")]
    Input(String),
    /// A window is larger than the configured cap.
    #[error("size error: {what} has {size} points, cap is {cap}")]
    Size { what: String, size: usize, cap: usize },
    /// Text could not be parsed.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    /// The operation is not defined for the image boundary policy.
    #[error("unsupported boundary policy: {0}")]
    UnsupportedPolicy(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
