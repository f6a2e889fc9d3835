use std::path::PathBuf;

/// Errors produced by the chain, solver, fidelity and sweep layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("chain of {n_sites} sites outside supported range [{min}, {max}]")]
    Capacity { n_sites: u32, min: u32, max: u32 },

    #[error("invalid chain parameter: {0}")]
    InvalidChain(String),

    #[error("state vector length {got} does not match Hilbert dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("basis index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("state vector is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("invalid solver configuration: {0}")]
    InvalidSolverConfig(String),

    #[error("spectrum is not converged: {0}")]
    Unconverged(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sampled curve is too short or its grid is not strictly increasing")]
    BadCurve,

    #[error("invalid sweep specification: {0}")]
    InvalidSweep(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed sweep table {path}: {reason}")]
    MalformedTable { path: PathBuf, reason: String },
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
