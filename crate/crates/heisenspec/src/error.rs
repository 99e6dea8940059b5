use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected n={expected}, got n={got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("kernel support leaves the lattice at node {node}")]
    SupportOverflow { node: usize },

    #[error("stencil leaves the lattice at node {node}")]
    StencilOutOfBounds { node: usize },

    #[error("under-resolved kernel on axis {axis}: {cells:.2} cells across support, need {required}")]
    UnderResolved {
        axis: String,
        cells: f64,
        required: f64,
    },

    #[error("unstable time step: dt={dt:e} exceeds limit {limit:e}")]
    UnstableStep { dt: f64, limit: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("kernel matrix is not symmetric (max asymmetry {0:e})")]
    NonSymmetric(f64),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
