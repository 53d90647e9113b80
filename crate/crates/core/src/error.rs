use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("unsupported modulation scheme: {0}")]
    Scheme(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("parameter layout mismatch: {0}")]
    Layout(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data format error: {0}")]
    Format(String),
    #[error("non-finite value detected: {0}")]
    Numeric(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line front-end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Param(_) | Error::Scheme(_) => 2,
            Error::Numeric(_) => 4,
            _ => 3,
        }
    }
}

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($arg:tt)*) => {
        if !$cond {
            return Err($crate::error::Error::$variant(format!($($arg)*)));
        }
    };
}
pub(crate) use ensure;
