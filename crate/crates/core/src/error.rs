use thiserror::Error;

use crate::market::Signal;

/// Errors produced by the model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("posterior is undefined: signal {signal:?} has probability zero at xi = {xi}")]
    UndefinedPosterior { signal: Signal, xi: f64 },

    #[error("degenerate signal policy (alpha = {alpha}, beta = {beta}): one signal never occurs")]
    DegeneratePolicy { alpha: f64, beta: f64 },

    #[error("point (alpha = {alpha}, beta = {beta}) admits no interior equilibrium")]
    InfeasiblePoint { alpha: f64, beta: f64 },

    #[error("integration step must be positive, got {0}")]
    InvalidStep(f64),

    #[error("commission c = {0} must be below 1")]
    CommissionTooLarge(f64),

    #[error("analysis window contains no period with active sellers")]
    EmptyWindow,
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            name,
            reason: format!("{value} is not a probability in [0, 1]"),
        })
    }
}
