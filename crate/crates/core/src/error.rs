use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: expected {expected} samples, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("broken Hermitian symmetry: imaginary residue {residue:e}")]
    BrokenHermitian { residue: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("CFL violation at step {step} (t = {t}): cfl number {cfl:.4} exceeds {limit}")]
    Cfl {
        step: u64,
        t: f64,
        cfl: f64,
        limit: f64,
    },

    #[error("non-finite state at step {step} (t = {t})")]
    NonFinite { step: u64, t: f64 },

    #[error("energy records are not adjacent in time")]
    NonAdjacent,

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of a running integration (CFL, NaN).
    pub fn is_runtime_abort(&self) -> bool {
        matches!(self, Error::Cfl { .. } | Error::NonFinite { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
