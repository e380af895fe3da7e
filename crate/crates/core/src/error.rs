use thiserror::Error;

/// Errors produced by the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input data (dimension mismatches, invalid
    /// values, bad grids).
    #[error("input error: {0}")]
    Input(String),

    /// A numerical routine failed to meet its contract (SVD breakdown,
    /// singular matrices, non-convergence).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The enumeration cutoff captured too little probability mass.
    #[error(
        "captured probability mass {achieved:.12} is below the required {required:.12}; \
         raise max_total_photons"
    )]
    CutoffTooSmall { achieved: f64, required: f64 },

    /// A state outside the supported class was passed in (e.g. impure).
    #[error("unsupported state: {0}")]
    UnsupportedState(String),

    /// A resource budget (photon cap, Fock-space dimension) was exceeded.
    #[error("resource budget exceeded: {0}")]
    Resource(String),

    /// Verification checks failed.
    #[error("verification failed: {0}")]
    Verification(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("parse error in {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
