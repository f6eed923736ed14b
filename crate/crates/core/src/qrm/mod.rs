//! Quasi-reversibility solver for the forward-in-time pricing problem.

mod assembly;
mod banded;
mod functional;
mod grid;
mod problem;
mod solve;
pub(crate) mod stencil;

pub use assembly::LeastSquaresOperator;
pub use banded::{BandedCholesky, BandedSym};
pub use functional::{
    discrete_functional, functional_parts, h2_norm_sq, residual_at, residual_norm_sq,
    FunctionalParts,
};
pub use grid::Grid;
pub use problem::{coefficient_a, to_dimensionless, DimensionlessProblem};
pub use solve::{
    functional_gradient, normal_factor, predict_next_day, qrm_solve, qrm_solve_with,
    Preconditioner, QrmSolution, SolverConfig,
};
