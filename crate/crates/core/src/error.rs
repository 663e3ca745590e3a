use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("site dimension must be at least 2, got {0}")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("site {site} out of range for a chain of {sites} sites")]
    SiteOutOfRange { site: usize, sites: usize },

    #[error("shift by {shift} moves support outside the open chain of {sites} sites")]
    SupportLeavesChain { shift: i64, sites: usize },

    #[error("operands live on different chain geometries")]
    GeometryMismatch,

    #[error("operator is not self-adjoint (deviation {deviation:.3e})")]
    NotSelfAdjoint { deviation: f64 },

    #[error("dimension {dim} exceeds the configured cap {cap}")]
    SizeCap { dim: usize, cap: usize },

    #[error("Krylov propagation did not converge (residual {residual:.3e})")]
    KrylovNonConvergence { residual: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("chain too short: need at least {needed} sites, got {sites}")]
    ChainTooShort { needed: usize, sites: usize },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LabError {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) | LabError::InvalidModel(_) | LabError::InvalidArgument(_) => 2,
            LabError::SizeCap { .. } => 3,
            LabError::KrylovNonConvergence { .. } => 4,
            _ => 1,
        }
    }
}
