use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not Hermitian (relative deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("eigendecomposition did not converge (dimension {dim})")]
    EigenNoConvergence { dim: usize },

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e} below tolerance")]
    NotPositive { eigenvalue: f64 },

    #[error("invalid constellation: {0}")]
    InvalidConstellation(String),

    #[error("no grid spacing reaches the requested variance: {0}")]
    SpacingUnsolvable(String),

    #[error("truncation too small: tail mass {tail_mass:e} at dimension {dim}")]
    Truncation { tail_mass: f64, dim: usize },

    #[error("channel statistics inconsistent with any physical channel: excess term {excess:e}")]
    InconsistentStats { excess: f64 },

    #[error("covariance matrix is not physical: {0}")]
    NonPhysical(String),

    #[error("entropy argument {0:e} is negative")]
    NegativeEntropyArgument(f64),

    #[error("homodyne detection needs a caller-supplied mutual information")]
    MissingMutualInfo,

    #[error("resolution of the identity fails: deviation {deviation:e}")]
    Resolution { deviation: f64 },

    #[error("w vanishes but the correction term is {corr:e}")]
    DegenerateCorrection { corr: f64 },

    #[error("numerical check failed: {0}")]
    Numerical(String),

    #[error("failed to parse {what}: {msg}")]
    Parse { what: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
