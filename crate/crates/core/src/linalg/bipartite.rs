use num_complex::Complex64;

use super::matrix::{ComplexMatrix, ZERO};
use super::LinalgError;

/// Which tensor factor of a bipartite space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Operator on `H_A ⊗ H_B`.
///
/// Basis vector `|i⟩_A ⊗ |j⟩_B` sits at row `i·dim_b + j`. Every module in
/// the crate relies on this ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteOperator {
    dim_a: usize,
    dim_b: usize,
    matrix: ComplexMatrix,
}

impl BipartiteOperator {
    pub fn new(dim_a: usize, dim_b: usize, matrix: ComplexMatrix) -> Result<Self, LinalgError> {
        let n = dim_a * dim_b;
        if matrix.rows() != n || matrix.cols() != n {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} matrix for dims [{dim_a}, {dim_b}]",
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(Self { dim_a, dim_b, matrix })
    }

    /// `a ⊗ b` with dimension tags taken from the factors.
    pub fn product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Self, LinalgError> {
        if !a.is_square() || !b.is_square() {
            return Err(LinalgError::DimensionMismatch("factors must be square".into()));
        }
        Self::new(a.rows(), b.rows(), a.kron(b))
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.dim_a, self.dim_b)
    }

    pub fn dim(&self) -> usize {
        self.dim_a * self.dim_b
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn with_matrix(&self, matrix: ComplexMatrix) -> Result<Self, LinalgError> {
        Self::new(self.dim_a, self.dim_b, matrix)
    }

    fn check(&self) -> Result<(), LinalgError> {
        let n = self.dim();
        if self.matrix.rows() != n || self.matrix.cols() != n {
            return Err(LinalgError::DimensionMismatch(format!(
                "matrix is {}x{}, dims give {n}",
                self.matrix.rows(),
                self.matrix.cols()
            )));
        }
        Ok(())
    }

    /// Transpose on the B factor: `(T^Γ)_{(i,j),(k,l)} = T_{(i,l),(k,j)}`.
    pub fn partial_transpose(&self) -> Result<Self, LinalgError> {
        self.check()?;
        let (da, db) = (self.dim_a, self.dim_b);
        let m = ComplexMatrix::from_fn(da * db, da * db, |r, c| {
            let (i, j) = (r / db, r % db);
            let (k, l) = (c / db, c % db);
            self.matrix[(i * db + l, k * db + j)]
        });
        Ok(Self { dim_a: da, dim_b: db, matrix: m })
    }

    /// Traces out the factor not selected by `keep`.
    pub fn partial_trace(&self, keep: Subsystem) -> Result<ComplexMatrix, LinalgError> {
        self.check()?;
        let (da, db) = (self.dim_a, self.dim_b);
        Ok(match keep {
            Subsystem::A => ComplexMatrix::from_fn(da, da, |i, k| {
                (0..db).map(|j| self.matrix[(i * db + j, k * db + j)]).sum()
            }),
            Subsystem::B => ComplexMatrix::from_fn(db, db, |j, l| {
                (0..da).map(|i| self.matrix[(i * db + j, i * db + l)]).sum()
            }),
        })
    }

    /// Swaps the two factors, returning an operator on `H_B ⊗ H_A`.
    pub fn swap_factors(&self) -> Self {
        let (da, db) = (self.dim_a, self.dim_b);
        let m = ComplexMatrix::from_fn(da * db, da * db, |r, c| {
            let (j, i) = (r / da, r % da);
            let (l, k) = (c / da, c % da);
            self.matrix[(i * db + j, k * db + l)]
        });
        Self { dim_a: db, dim_b: da, matrix: m }
    }

    /// Regroups `(A1 B1) ⊗ (A2 B2)` into `(A1 A2) ⊗ (B1 B2)`.
    pub fn tensor_regrouped(&self, other: &Self) -> Self {
        let (a1, b1) = self.dims();
        let (a2, b2) = other.dims();
        let raw = self.matrix.kron(&other.matrix);
        let n2 = a2 * b2;
        // position of |x1 y1⟩|x2 y2⟩ in the raw (A1B1)(A2B2) ordering
        let raw_index = |idx: usize| {
            let (a, b) = (idx / (b1 * b2), idx % (b1 * b2));
            let (x1, x2) = (a / a2, a % a2);
            let (y1, y2) = (b / b2, b % b2);
            (x1 * b1 + y1) * n2 + x2 * b2 + y2
        };
        let n = a1 * a2 * b1 * b2;
        let map: Vec<usize> = (0..n).map(raw_index).collect();
        let m = ComplexMatrix::from_fn(n, n, |r, c| raw[(map[r], map[c])]);
        Self { dim_a: a1 * a2, dim_b: b1 * b2, matrix: m }
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn add(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.dims() != other.dims() {
            return Err(LinalgError::DimensionMismatch("bipartite dims differ".into()));
        }
        Ok(Self { dim_a: self.dim_a, dim_b: self.dim_b, matrix: &self.matrix + &other.matrix })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.dims() != other.dims() {
            return Err(LinalgError::DimensionMismatch("bipartite dims differ".into()));
        }
        Ok(Self { dim_a: self.dim_a, dim_b: self.dim_b, matrix: &self.matrix - &other.matrix })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { dim_a: self.dim_a, dim_b: self.dim_b, matrix: self.matrix.scale(s) }
    }
}

/// Swap operator F|i⟩|j⟩ = |j⟩|i⟩ on `C^d ⊗ C^d`.
pub fn swap_operator(d: usize) -> ComplexMatrix {
    let mut f = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            f[(i * d + j, j * d + i)] = Complex64::new(1.0, 0.0);
        }
    }
    f
}

/// `|v⟩` as a vector, all entries zero except `idx`.
pub fn basis_vector(n: usize, idx: usize) -> Vec<Complex64> {
    let mut v = vec![ZERO; n];
    v[idx] = Complex64::new(1.0, 0.0);
    v
}
