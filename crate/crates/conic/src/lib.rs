//! Small dense second-order cone programming.
//!
//! Programs are built with [`ConeProgram`] in maximisation form
//!
//! ```text
//!     maximise cᵀx  s.t.  Ax = b,  h − Gx ∈ K
//! ```
//!
//! where `K` is a product of nonnegative orthants and second-order cones, and
//! solved with [`solve`], a homogeneous self-dual interior-point method.
//! [`add_exp_upper_envelope`] adds a conservative polyhedral stand-in for
//! `z ≥ 2^ρ`.

mod cones;
pub mod dump;
mod envelope;
mod ipm;
mod program;

pub use envelope::{add_envelope, add_exp_upper_envelope, ExpEnvelope};
pub use ipm::{solve, Residuals, SolveReport, SolveStatus, SolverSettings};
pub use program::{Cone, ConeProgram, LinExpr, SparseRow, Var};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConicError {
    #[error("invalid program: {0}")]
    InvalidProgram(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Convenience wrapper around [`solve`] taking a tolerance and iteration cap.
pub fn solve_with(p: &ConeProgram, tol: f64, max_iter: usize) -> Result<SolveReport, ConicError> {
    solve(
        p,
        &SolverSettings {
            tol,
            max_iter,
            ..SolverSettings::default()
        },
    )
}
