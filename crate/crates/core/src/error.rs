use thiserror::Error;

/// Errors raised anywhere in the construction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("supercritical exponent: p = {p} >= (N+2)/(N-2) = {critical} for N = {dimension}")]
    Supercritical {
        dimension: usize,
        p: f64,
        critical: f64,
    },

    #[error("shooting bracket not found on [{lo}, {hi}]: {reason}")]
    BracketNotFound { lo: f64, hi: f64, reason: String },

    #[error("{what}: no convergence after {iterations} iterations")]
    NoConvergence { what: String, iterations: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("sample ({x}, {y}) lies outside the fundamental sector of x_1")]
    OutsideSector { x: f64, y: f64 },

    #[error("contraction failure at step {step}: ratio {ratio:.4} (history {history:?})")]
    ContractionFailure {
        step: usize,
        ratio: f64,
        history: Vec<f64>,
    },

    #[error("Newton divergence at step {step}: residual {residual:.3e} after exhausting step damping")]
    NewtonDivergence { step: usize, residual: f64 },

    #[error("solution is not positive: value {value:.3e} at ({x:.4}, {y:.4})")]
    Negativity { value: f64, x: f64, y: f64 },

    #[error("Newton converged to the trivial solution (max value {max:.3e})")]
    TrivialSolution { max: f64 },

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Numerical failures (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::BracketNotFound { .. }
                | Error::NoConvergence { .. }
                | Error::Degenerate(_)
                | Error::ContractionFailure { .. }
                | Error::NewtonDivergence { .. }
                | Error::Negativity { .. }
                | Error::TrivialSolution { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
