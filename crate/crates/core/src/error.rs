use thiserror::Error;

/// Failure modes shared by every module.
///
/// The variants map onto the command-line exit codes: validation errors are
/// bad input, domain errors are inputs outside the region where a formula or
/// integral is defined, convergence errors are numerical procedures that did
/// not reach their tolerance.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("outside numeric domain: {0}")]
    Domain(String),
    #[error("no convergence: {0}")]
    Convergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn convergence(msg: impl Into<String>) -> Self {
        Error::Convergence(msg.into())
    }

    /// Process exit status: 2 validation, 3 domain, 4 convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) => 2,
            Error::Domain(_) => 3,
            Error::Convergence(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Validation(_) => "validation",
            Error::Domain(_) => "domain",
            Error::Convergence(_) => "convergence",
        }
    }
}
