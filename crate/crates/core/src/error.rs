use thiserror::Error;

use crate::tensor::SelectionRule;

/// Errors produced by the gate builders, gradient routines and state engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix `{name}` is not unitary: max |U^dag U - I| = {deviation:.3e} exceeds {tolerance:.0e}")]
    NonUnitary {
        name: &'static str,
        deviation: f64,
        tolerance: f64,
    },
    #[error("non-finite parameter `{0}`")]
    NonFinite(&'static str),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("tensor with {requested} complex entries exceeds the element budget of {budget}")]
    BudgetExceeded { requested: u128, budget: u128 },
    #[error("recurrence for the order-{order} phase gate is unstable at eta = {eta} (requires |eta| > 1)")]
    UnstableRegime { order: u32, eta: f64 },
    #[error("quadrature did not converge: error estimate {estimate:.3e} above tolerance {tolerance:.3e}")]
    QuadratureNonConvergence { estimate: f64, tolerance: f64 },
    #[error("selection rule {expected:?} is violated by {found} nonzero entries")]
    SelectionRuleMismatch { expected: SelectionRule, found: usize },
    #[error("operation needs a tensor tagged {expected:?}, got {actual:?}")]
    WrongSelectionRule { expected: SelectionRule, actual: SelectionRule },
    #[error("non-finite value encountered: {0}")]
    NonFiniteValue(String),
    #[error("configuration error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },
    #[error("malformed FGT1 container: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
