use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input parameters.
    #[error("configuration error: {0}")]
    Config(String),
    /// The request is well formed but exceeds what a backend can do.
    #[error("capability error: {0}")]
    Capability(String),
    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    /// Failure while a valid request was executing.
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for this error: 2 for bad input, 3 for capability
    /// limits, 1 for everything that fails at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Parse(_)
            | Error::InvalidArgument(_)
            | Error::IndexOutOfRange { .. }
            | Error::DimensionMismatch { .. } => 2,
            Error::Capability(_) => 3,
            Error::Runtime(_) | Error::Io(_) => 1,
        }
    }

    /// Prefixes the message with `label`, keeping the error kind.
    pub fn labeled(self, label: &str) -> Error {
        match self {
            Error::Config(m) => Error::Config(format!("{label}: {m}")),
            Error::Capability(m) => Error::Capability(format!("{label}: {m}")),
            Error::InvalidArgument(m) => Error::InvalidArgument(format!("{label}: {m}")),
            Error::Parse(m) => Error::Parse(format!("{label}: {m}")),
            Error::Runtime(m) => Error::Runtime(format!("{label}: {m}")),
            Error::Io(e) => Error::Runtime(format!("{label}: {e}")),
            Error::IndexOutOfRange { index, len } => {
                Error::Config(format!("{label}: index {index} out of range 1..={len}"))
            }
            Error::DimensionMismatch { expected, found } => Error::Config(format!(
                "{label}: dimension mismatch: expected {expected}, found {found}"
            )),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_site(index: usize, len: usize) -> Result<()> {
    if index == 0 || index > len {
        Err(Error::IndexOutOfRange { index, len })
    } else {
        Ok(())
    }
}
