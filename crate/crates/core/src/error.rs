use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum PheError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("arm index {arm} out of range for {num_arms} arms")]
    ArmOutOfRange { arm: usize, num_arms: usize },

    #[error("reward {0} outside [0, 1]; rescale it first")]
    InvalidReward(f64),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("logistic solver did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    SolverDiverged { iterations: usize, grad_norm: f64 },

    #[error("aggregation error: {0}")]
    Aggregation(String),

    #[error("episode failed (instance {instance}, policy {policy}, round {round}): {source}")]
    Episode {
        instance: u64,
        policy: String,
        round: usize,
        #[source]
        source: Box<PheError>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, PheError>;
