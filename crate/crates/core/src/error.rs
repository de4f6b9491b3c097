use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid population state: {0}")]
    InvalidState(String),

    #[error("invalid process specification: {0}")]
    InvalidSpec(String),

    /// Every reproduction weight vanished at a state, so no type can be chosen
    /// to reproduce.
    #[error("degenerate state {state:?}: all reproduction weights are zero")]
    DegenerateState { state: Vec<u32> },

    #[error("negative reproduction weight {weight} for type {index} at state {state:?}; linear selection needs non-negative fitness, use fermi selection instead")]
    NegativeFitness {
        state: Vec<u32>,
        index: usize,
        weight: f64,
    },

    #[error("kernel is not irreducible: {0}")]
    NotIrreducible(String),

    #[error("method not applicable: {0}")]
    NotApplicable(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("power iteration did not converge after {iterations} iterations (last change {change:e}, residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        change: f64,
        residual: f64,
    },

    #[error("stationarity residual {residual:e} exceeds tolerance {tolerance:e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid probability {0}: must be positive")]
    InvalidProbability(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of an iterative solver to reach its tolerance, as
    /// opposed to bad input.
    pub fn is_convergence_failure(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::ResidualTooLarge { .. }
        )
    }
}
