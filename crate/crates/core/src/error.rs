use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("non-finite amplitudes after kick {kick}")]
    NonFinite { kick: usize },

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("fit failure: {0}")]
    Fit(String),

    /// The echo never leaves unity, so no decay window exists.
    #[error("no decaying window in series")]
    NoDecay,

    #[error("no quasienergy with positive imaginary part (Hermitian regime)")]
    NoGrowingModes,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParams(_) | Error::Config(_) | Error::DimensionMismatch { .. } => 2,
            Error::NonFinite { .. } | Error::ZeroNorm => 3,
            Error::Eigensolver(_) | Error::NoGrowingModes => 4,
            Error::Fit(_) | Error::NoDecay => 5,
            Error::Io(_) => 1,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
