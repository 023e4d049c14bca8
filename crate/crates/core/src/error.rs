use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    /// `c` is not in the column space of the information matrix (or the span
    /// of the candidate support).
    #[error("target vector is not estimable (relative residual {residual:.3e})")]
    NotEstimable { residual: f64 },

    #[error("design variable {u} outside domain [{lo}, {hi}]")]
    Domain { u: f64, lo: f64, hi: f64 },

    #[error("turning point undefined: quadratic coefficient of theta is zero")]
    TurningPointUndefined,

    #[error("optimization failed: every start was infeasible (best residual {best_residual:.3e})")]
    OptimizationFailed { best_residual: f64 },

    /// An oracle cannot be run on this instance (size caps, unsupported model).
    #[error("oracle infeasible: {0}")]
    OracleInfeasible(String),
}
