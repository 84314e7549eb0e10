use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("probability {index} = {value:e} lies outside [0, 1]")]
    OutOfSimplex { index: usize, value: f64 },

    #[error("setting {setting} sums to {sum} instead of 1")]
    Normalization { setting: usize, sum: f64 },

    #[error("no-signaling condition violated by {deviation:e}")]
    NoSignalingViolation { deviation: f64 },

    #[error("count {index} is positive but its probability is zero")]
    ZeroProbabilityWithCount { index: usize },

    #[error("invalid experiment parameters: {0}")]
    InvalidParams(String),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid hidden weights: {0}")]
    InvalidWeights(String),

    #[error("degenerate measurement geometry: {0}")]
    DegenerateGeometry(String),

    #[error("linear program failed: {0}")]
    SolverFailure(String),

    #[error("optimizer did not converge: {0}")]
    ConvergenceFailure(String),

    #[error("only {effective:.1} effective sample points carry weight (floor {floor})")]
    DegenerateWeights { effective: f64, floor: usize },

    #[error("rescaled probability {index} = {value:e} is negative; gamma is inconsistent with p")]
    NegativeQ { index: usize, value: f64 },

    #[error("likelihood maximum at gamma = {gamma} sits on the edge of the scan range")]
    RangeMaximumAtBoundary { gamma: f64 },

    #[error("region {region} holds {available} prior points, {needed} needed")]
    InsufficientRegionPoints {
        region: String,
        available: usize,
        needed: usize,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("declared total {declared} disagrees with column sum {actual}")]
    TotalMismatch { declared: u64, actual: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 2 for bad input, 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SolverFailure(_)
            | Error::ConvergenceFailure(_)
            | Error::DegenerateWeights { .. }
            | Error::RangeMaximumAtBoundary { .. } => 3,
            Error::Io(_) | Error::Cache(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
