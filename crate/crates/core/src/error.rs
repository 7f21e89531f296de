use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The lattice has no adjacent pairs, so pair moments are undefined.
    #[error("degenerate lattice: {0}")]
    DegenerateLattice(String),

    /// Series approximations were asked for outside their validity envelope.
    #[error("outside series validity envelope: {0}")]
    DomainWarning(String),

    /// Every colour is absent or everywhere present; the contamination rate
    /// cannot be identified from such a field.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
