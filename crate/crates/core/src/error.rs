use thiserror::Error;

/// Invalid model or numerical configuration.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("parameter `{name}` must be finite and strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error(
        "discount rate r = {r} must exceed the drift magnitude alpha = {alpha} \
         (otherwise never adopting has infinite expected cost)"
    )]
    DiscountNotAboveDrift { r: f64, alpha: f64 },

    #[error("unknown model parameter `{0}`")]
    UnknownParameter(String),

    #[error("belief must lie strictly inside (0, 1), got {0}")]
    BeliefOutOfRange(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid simulation config: {0}")]
    InvalidSim(String),

    #[error("invalid solver config: {0}")]
    InvalidSolver(String),

    #[error("invalid boundary: {0}")]
    InvalidBoundary(String),
}
