//! Dense primal–dual interior-point solver for block-diagonal semidefinite
//! programs, with a Hermitian front end and an LMI modelling layer.

mod chol;
mod embed;
mod lmi;
mod problem;
mod solver;
mod verify;

pub use embed::{embed_hermitian, unembed, HermitianBlock, HermitianProblem, HermitianSolution};
pub use lmi::{HermExpr, LinExpr, Model, ModelSolution};
pub use problem::{BlockSpec, ConeKind, Constraint, SdpProblem, Sense, SparseSym};
pub use solver::{
    default_tol, solve, solve_with, BlockValue, SdpSolution, SolverOptions, Status, DEFAULT_MAX_ITER,
    DEFAULT_TOL, TOL_ENV,
};
pub use verify::{verify, Certificate, Check, VerifyReport};

use crate::linalg::LinalgError;

#[derive(Debug, thiserror::Error)]
pub enum SdpError {
    #[error("ill-posed problem: {0}")]
    IllPosed(String),
    #[error(
        "solver stopped with status {status:?} after {iterations} iterations \
         (gap {gap:.2e}, primal residual {primal_residual:.2e}, dual residual {dual_residual:.2e})"
    )]
    SolverFailure {
        status: Status,
        gap: f64,
        primal_residual: f64,
        dual_residual: f64,
        iterations: usize,
    },
    #[error("solution failed verification: {0}")]
    Verification(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
