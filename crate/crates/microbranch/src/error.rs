use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {name}: {reason} (got {value})")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("trace is not periodic-compatible: u(0) = {left}, u(1) = {right}")]
    NonPeriodicTrace { left: f64, right: f64 },
    #[error("prediction does not match parameters: {0}")]
    MismatchedPrediction(String),
    #[error("truncation level {level} incompatible with period geometry: (3/2)^I = {lhs:.3e} vs N ell/theta = {rhs:.3e}")]
    IncompatibleTruncation { level: u32, lhs: f64, rhs: f64 },
    #[error("construction not admissible: {0}")]
    Inadmissible(String),
    #[error("non-finite energy in term {term}")]
    NonFiniteEnergy { term: &'static str },
    #[error("malformed field data: {0}")]
    FieldFormat(String),
    #[error("malformed range spec {input:?}: {reason}")]
    RangeSpec { input: String, reason: &'static str },
    #[error("malformed grid spec {input:?}: {reason}")]
    GridSpec { input: String, reason: &'static str },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
