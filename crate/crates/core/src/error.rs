use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shift (x = {x}, omega = {omega}) is not on the grid lattice")]
    OffGridShift { x: f64, omega: f64 },

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("window has zero norm")]
    ZeroWindow,

    #[error("signal has zero norm")]
    ZeroSignal,

    #[error("dilation factor must be positive, got {0}")]
    InvalidDilation(f64),

    #[error("domain extends outside the computable time-frequency box: {0}")]
    DomainOutsideGrid(String),

    #[error("domain rasterizes to zero cells")]
    EmptyDomain,

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("lattice step {step} is not an integer multiple of the grid step {grid_step}")]
    LatticeIncommensurate { step: f64, grid_step: f64 },

    #[error("truncated lattice misses a fraction {leakage:e} of the STFT mass")]
    TruncationLeakage { leakage: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("objective became non-finite")]
    NonFiniteObjective,

    #[error("no convergence after {iters} iterations (residual {residual:e})")]
    NoConvergence { iters: usize, residual: f64 },

    #[error("recentering changed the objective by {0:e}")]
    RecenterDrift(f64),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unknown check suite `{0}`")]
    UnknownSuite(String),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
