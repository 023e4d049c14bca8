//! Closed-form Elfving signs and weights for c-optimal experimental design.
//!
//! For any candidate support `x_1..x_l` with `c` in their span, the optimal
//! signs and weights are explicit functions of `x_i' M^- c`, where `M` is the
//! uniform-weight information matrix. Computing a c-optimal design then reduces
//! to maximizing the squared norm of the resulting Elfving point over k-tuples
//! of design points, which [`optimizer::solve`] does with a multi-start
//! Nelder-Mead search. The [`oracle`] module holds brute-force verifiers
//! (grid LP, sign enumeration, weight lattices) used to certify results.

pub mod design;
pub mod elfving;
pub mod error;
pub mod linalg;
pub mod model;
pub mod nelder_mead;
pub mod optimizer;
pub mod oracle;

pub use design::{DesignMeasure, SupportPoint};
pub use elfving::{
    design_from_support, elfving_point, phi, prune_dependent_support, signs_and_weights,
    WeightSignSolution,
};
pub use error::{Error, Result};
pub use linalg::{Matrix, Tolerances, Vector};
pub use model::{CurveModel, DesignSpace, FeatureMap, GlmTransform, ProblemSpec};

pub use optimizer::{canonicalize, solve, SolveResult, SolveSettings};
pub use oracle::{Certificate, GridSpec, OracleMethod};
