use thiserror::Error;

/// Errors raised by the perpetuity library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("distribution has no atoms")]
    EmptyDistribution,
    #[error("atom location {0} is not strictly positive and finite")]
    NonPositiveLocation(f64),
    #[error("atom weight {0} is not strictly positive and finite")]
    NonPositiveWeight(f64),
    #[error("weights sum to {sum}, which deviates from 1 by more than {tolerance}")]
    WeightSum { sum: f64, tolerance: f64 },
    #[error("sample is empty")]
    EmptySample,
    #[error("sample value {0} is negative or not finite")]
    InvalidSampleValue(f64),
    #[error("sample has zero total mass; size-biasing is undefined")]
    ZeroMass,
    #[error("quantile table is invalid: {0}")]
    QuantileTable(String),
    #[error("invalid response function: {0}")]
    InvalidResponse(String),
    #[error("no non-zero solution exists: E log A = {e_log_a} is not negative")]
    ExistenceGate { e_log_a: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("means differ: {0} vs {1}")]
    MeanMismatch(f64, f64),
    #[error("delta {0} is outside (1, 2)")]
    DeltaOutOfRange(f64),
    #[error("probe {0} lies outside the data support")]
    ProbeOutsideSupport(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("checksum mismatch for {path}: recorded {expected}, found {actual}")]
    Checksum {
        path: String,
        expected: String,
        actual: String,
    },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
