use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("basis dimension {dim} exceeds capacity limit {max}")]
    Capacity { dim: u128, max: usize },

    #[error("occupation vector {0:?} is not a member of the basis")]
    UnknownState(Vec<u8>),

    #[error("basis index {index} out of range (dim {dim})")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(
        "eigensolver did not converge after {iterations} iterations (residual {residual:.3e})"
    )]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("wavenumber {q} is not on the momentum grid 2*pi*m/{sites}")]
    NotOnGrid { q: f64, sites: usize },

    #[error("sweep failed at axis value {value}")]
    SweepPoint {
        value: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
