use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("wrong sample count: expected 2m+1 = {expected}, got {got}")]
    SampleCount { expected: usize, got: usize },

    #[error("empty arc set")]
    EmptySet,

    #[error("component {index} [{lo:.6}, {hi:.6}] is shorter than the minimum cell length {min_len:.6}")]
    ComponentTooShort {
        index: usize,
        lo: f64,
        hi: f64,
        min_len: f64,
    },

    #[error("not a T-set: {reason}; critical values found: {critical_values:?}")]
    NotATSet {
        reason: String,
        critical_values: Vec<(f64, f64)>,
    },

    #[error("endpoint singularity at t = {0}")]
    EndpointSingularity(f64),

    #[error("angle {0} lies outside the arc set")]
    OutsideSet(f64),

    #[error("angle {t} is within {distance:e} of a branch endpoint")]
    NearBranchEndpoint { t: f64, distance: f64 },

    #[error("collocation solve failed: residual {residual:e} (M = {degree}); {detail}")]
    SolverFailed {
        residual: f64,
        degree: usize,
        detail: String,
    },

    #[error("hypothesis not met: {0}")]
    Hypothesis(String),

    #[error("undefined functional: {0}")]
    Undefined(String),
}

pub type Result<T> = std::result::Result<T, Error>;
