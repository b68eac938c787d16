use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("shape mismatch: expected {expected} nodes, got {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("weight must be positive, found {value:e} at node {node}")]
    NonPositiveWeight { node: usize, value: f64 },

    #[error("field must integrate to zero, integral is {0:e}")]
    NotMeanZero(f64),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("density dropped to {min:e} (threshold {threshold:e}) at step {step}")]
    Positivity { step: usize, min: f64, threshold: f64 },

    #[error("field magnitude exceeded {limit:e} at step {step}")]
    BlowUp { step: usize, limit: f64 },

    #[error("particle left the interpolation domain at time index {time_index}")]
    ParticleEscaped { time_index: usize },

    #[error("ratio is undefined: {0}")]
    UndefinedRatio(String),
}

pub type Result<T> = std::result::Result<T, Error>;
