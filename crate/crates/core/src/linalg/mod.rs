//! Dense complex linear algebra: tensor structure, partial transpose and
//! trace, Hermitian eigendecomposition, trace and operator norms.

mod bipartite;
mod eigh;
mod matrix;

pub use bipartite::{basis_vector, swap_operator, BipartiteOperator, Subsystem};
pub use eigh::{eigh, eigvalsh, is_psd, min_eigenvalue, op_norm, sqrt_psd, trace_norm, Eigh};
pub use matrix::{tensor, ComplexMatrix, HERMITIAN_TOL};
pub use num_complex::Complex64;

#[derive(Debug, thiserror::Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("eigensolver did not converge within {0} sweeps")]
    NoConvergence(usize),
}
