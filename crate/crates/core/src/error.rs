use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("not a valid distribution function: {0}")]
    Shape(String),
    #[error("supports do not overlap: {0}")]
    Support(String),
    #[error("invalid weights: {0}")]
    Weight(String),
    #[error("invalid bandwidth: {0}")]
    Bandwidth(String),
    #[error("combination failed: {0}")]
    Combination(String),
    #[error("density unavailable: {0}")]
    Density(String),
    #[error("cannot partition data: {0}")]
    Partition(String),
    #[error("invalid data: {0}")]
    Data(String),
    #[error("{path}: line {line}: {msg}")]
    Parse { path: String, line: u64, msg: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($arg:tt)+) => {
        if !$cond {
            return Err($crate::error::Error::$variant(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure;
