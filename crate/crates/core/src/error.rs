use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("form degree mismatch: expected {expected}, found {found}")]
    Degree { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("ambiguous lift between samples {index} (jump {jump} on axis {axis})")]
    AmbiguousLift { index: usize, axis: usize, jump: f64 },

    #[error("derivative of order {order} is not supported by this test function")]
    UnsupportedDerivative { order: usize },

    #[error("Lagrangian is not differentiable at a degenerate fiber configuration")]
    NonDifferentiable,

    #[error("moment system is rank deficient by {deficiency}")]
    RankDeficient { deficiency: usize },

    #[error("parameter t = {t} lies outside the validity interval ({lower}, {upper})")]
    OutsideValidity { t: f64, lower: f64, upper: f64 },

    #[error("linear constraints are inconsistent (residual {residual:e})")]
    Inconsistent { residual: f64 },

    #[error("linear program is infeasible (phase-one residual {residual:e} on row {row})")]
    Infeasible { row: usize, residual: f64 },

    #[error("linear program is unbounded along column {column}")]
    Unbounded { column: usize },

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}
