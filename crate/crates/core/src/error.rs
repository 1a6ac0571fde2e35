use thiserror::Error;

/// Errors raised by the spectral toolkit.
///
/// The CLI maps [`Error::Input`] to exit code 2 and every other variant to
/// exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("eigensolver did not converge for a matrix of order {order}")]
    NoConvergence { order: usize },

    #[error("basis of size {basis} holds only {captured:.9} of the norm of mode {mode}")]
    Capacity {
        mode: String,
        basis: usize,
        captured: f64,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Process exit code: 2 for bad input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) | Error::Io(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
