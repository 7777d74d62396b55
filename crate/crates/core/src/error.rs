use thiserror::Error;

/// Clause of the monotone-mechanism definition a reward list violates.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MechanismViolation {
    #[error("a mechanism needs at least 2 ranks, got {0}")]
    Size(usize),
    #[error("rewards must be nonincreasing: a_{rank} < a_{next}", next = .rank + 1)]
    Monotonicity { rank: usize },
    #[error("all rewards are equal; at least one step a_i > a_(i+1) is required")]
    NoStrictInequality,
    #[error("reward at rank {rank} is not finite")]
    NonFinite { rank: usize },
    #[error("attention caps must be nonnegative (rank {rank})")]
    NegativeCap { rank: usize },
    #[error("{0}")]
    Constructor(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("invalid mechanism: {0}")]
    Mechanism(#[from] MechanismViolation),
    #[error("invalid cost model: {0}")]
    Cost(String),
    #[error("state error: {0}")]
    State(String),
    #[error("failed to converge: {0}")]
    Convergence(String),
    #[error("numeric error: {message} (error estimate {estimate:e})")]
    Numeric { message: String, estimate: f64 },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of an iterative method rather than of its inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Convergence(_) | Error::Numeric { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
