use thiserror::Error;

/// Errors raised by the solvers, the data model and the CLI plumbing.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: unsorted breakpoints, bounds violated, bad file content.
    #[error("validation error: {0}")]
    Validation(String),
    /// An argument lies outside the domain of the operation (negative k, x outside [0,1]).
    #[error("domain error: {0}")]
    Domain(String),
    /// Solver configuration that cannot be honored (grid cannot align, too few samples).
    #[error("configuration error: {0}")]
    Config(String),
    /// NaN/overflow, failed factorization, non-convergence.
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag used in the CLI's JSON error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Validation(_) => "validation",
            Error::Domain(_) => "domain",
            Error::Config(_) => "config",
            Error::Numerical(_) => "numerical",
            Error::Io(_) => "io",
        }
    }

    /// Process exit code: 1 = validation, 2 = numerical failure, 3 = I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Domain(_) | Error::Config(_) => 1,
            Error::Numerical(_) => 2,
            Error::Io(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
