use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate system: {0}")]
    Degenerate(String),
    #[error("matrix is not contracting (spectral radius {0})")]
    NotContracting(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("coefficient sum {sum} exceeds 2")]
    CoefficientSumExceeded { sum: f64 },
    #[error("interior conditions failed: {0}")]
    ConditionsFailed(String),
    #[error("target {target:?} lies outside the certified ball of radius {delta}")]
    TargetOutsideDelta { target: [f64; 2], delta: f64 },
    #[error("residual escaped [-1, 1] at step {step}: {value}")]
    ResidualEscape { step: usize, value: f64 },
    #[error("hull unavailable: {0}")]
    HullUnavailable(String),
    #[error("cannot separate cylinder bounds ({0})")]
    CannotSeparate(String),
    #[error("search exhausted without a certificate")]
    SearchExhausted,
    #[error("viewport is empty or degenerate")]
    ViewportEmpty,
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
