use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice side {0}: must be even and at least 4")]
    InvalidDimension(usize),

    #[error("site ({row}, {col}) is outside a lattice of side {side}")]
    IndexOutOfRange { row: usize, col: usize, side: usize },

    #[error("lane {lane} out of range for a bank of {n_lanes} lanes")]
    LaneOutOfRange { lane: usize, n_lanes: usize },

    #[error("operation requires model {expected}, got {found}")]
    ModelMismatch { expected: &'static str, found: &'static str },

    #[error("LFSR state must be nonzero and fit in {bits} bits, got {state:#x}")]
    InvalidLfsrState { state: u32, bits: u32 },

    #[error("requested {0} lanes but only 4095 distinct nonzero 12-bit local states exist")]
    TooManyLanes(usize),

    #[error("need at least {needed} bits, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("temperature must be positive and finite, got {0}")]
    InvalidTemperature(f64),

    #[error("local energy {0} is not one of -4, -2, 0, 2, 4")]
    InvalidEpsilon(i32),

    #[error("lane budget {lanes} cannot hold one row of {per_row} same-colour sites")]
    Capacity { lanes: usize, per_row: usize },

    #[error("exhaustive enumeration supports L = 2 or 4, got {0}")]
    TooLarge(usize),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),

    #[error("fit did not converge after {iterations} iterations (residual {residual:e})")]
    FitFailure { iterations: usize, residual: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("usage error in `{key}`: {message}")]
    Usage { key: String, message: String },

    #[error("environment error: {0}")]
    Environment(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn usage(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Usage { key: key.into(), message: message.into() }
    }
}
