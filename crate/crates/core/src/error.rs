use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid queue distribution: {0}")]
    InvalidDistribution(String),

    #[error("quadrature did not converge after {subdivisions} subdivisions (error estimate {error:e})")]
    NoConvergence { subdivisions: usize, error: f64 },

    #[error("linear solver did not converge after {iterations} sweeps (residual {residual:e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("price path covers {available} s but {needed} s are required")]
    InsufficientPath { needed: f64, available: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("event log is empty")]
    EmptyLog,

    #[error("no price changes found in event log")]
    NoPriceChanges,

    #[error("{bad} of {total} rows malformed (first: line {first_line}: {first_reason})")]
    MalformedLog {
        bad: usize,
        total: usize,
        first_line: usize,
        first_reason: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
