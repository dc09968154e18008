use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parameters violate the admissibility condition: {0}")]
    Inadmissible(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("unsupported dimension {0} (brute-force prox supports 1 or 2)")]
    UnsupportedDimension(usize),

    #[error("non-finite value in the vector field at x = {x:?}, y = {y:?}")]
    NonFinite { x: Vec<f64>, y: Vec<f64> },

    #[error("trajectory did not reach stationarity (stop reason: {0})")]
    NotConverged(String),

    #[error("insufficient data: {usable} usable samples, need at least {required}")]
    InsufficientData { usable: usize, required: usize },

    #[error("invalid slope {0}: polynomial decay requires a negative slope")]
    InvalidSlope(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
