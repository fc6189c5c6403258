//! Hermitian eigendecomposition by cyclic complex Jacobi rotations.
//!
//! Jacobi never mixes basis vectors that lie in different connected
//! components of the sparsity graph, so sparse inputs keep sparse
//! eigenvectors. The tempered SDPs rely on that to keep kernel bases sparse.

use num_complex::Complex64;

use super::matrix::{ComplexMatrix, ZERO};
use super::LinalgError;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues in ascending order with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigh {
    /// V·diag(f(λ))·V†.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        let w: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        ComplexMatrix::from_fn(n, n, |r, c| {
            let mut acc = ZERO;
            for k in 0..n {
                if w[k] != 0.0 {
                    acc += v[(r, k)] * v[(c, k)].conj() * w[k];
                }
            }
            acc
        })
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|l| l)
    }

    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        self.vectors.column(k)
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Inputs within the Hermitian tolerance are symmetrised first.
pub fn eigh(h: &ComplexMatrix) -> Result<Eigh, LinalgError> {
    let mut a = h.to_hermitian()?;
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = a.rows();
    let mut v = ComplexMatrix::identity(n);
    if n <= 1 {
        return Ok(Eigh {
            values: (0..n).map(|i| a[(i, i)].re).collect(),
            vectors: v,
        });
    }

    let scale = a.frobenius_norm();
    if scale == 0.0 {
        return Ok(Eigh { values: vec![0.0; n], vectors: v });
    }
    let target = (f64::EPSILON * scale) * (f64::EPSILON * scale);

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)].norm_sqr())
            .sum();
        if off <= target {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence(MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(Eigh { values, vectors })
}

/// One Jacobi rotation zeroing `a[p][q]`.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let g = a[(p, q)];
    let gabs = g.norm();
    if gabs == 0.0 {
        return;
    }
    let alpha = a[(p, p)].re;
    let beta = a[(q, q)].re;
    // tiny entries relative to both diagonals are rounded off to zero
    if gabs < f64::EPSILON * 1e-3 * (alpha.abs() + beta.abs()) {
        a[(p, q)] = ZERO;
        a[(q, p)] = ZERO;
        return;
    }
    let phase = g / gabs;
    let theta = (beta - alpha) / (2.0 * gabs);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // J = diag(1, conj(phase)) · [[c, s], [-s, c]]; new_col_p = c·col_p - s·conj(phase)·col_q, ...
    let jpp = Complex64::new(c, 0.0);
    let jqp = -phase.conj() * s;
    let jpq = Complex64::new(s, 0.0);
    let jqq = phase.conj() * c;

    let n = a.rows();
    // A ← A·J
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * jpp + akq * jqp;
        a[(k, q)] = akp * jpq + akq * jqq;
    }
    // A ← J†·A
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
        a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * jpp + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * jqq;
    }
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(h: &ComplexMatrix) -> Result<Vec<f64>, LinalgError> {
    Ok(eigh(h)?.values)
}

/// ‖H‖₁ for Hermitian H: the sum of absolute eigenvalues.
pub fn trace_norm(h: &ComplexMatrix) -> Result<f64, LinalgError> {
    Ok(eigvalsh(h)?.iter().map(|l| l.abs()).sum())
}

/// ‖H‖_∞ for Hermitian H: the largest absolute eigenvalue.
pub fn op_norm(h: &ComplexMatrix) -> Result<f64, LinalgError> {
    Ok(eigvalsh(h)?.iter().map(|l| l.abs()).fold(0.0, f64::max))
}

pub fn min_eigenvalue(h: &ComplexMatrix) -> Result<f64, LinalgError> {
    Ok(eigvalsh(h)?.first().copied().unwrap_or(0.0))
}

/// True iff the smallest eigenvalue is at least `-tol`.
pub fn is_psd(h: &ComplexMatrix, tol: f64) -> Result<bool, LinalgError> {
    Ok(min_eigenvalue(h)? >= -tol)
}

/// Principal square root of a PSD matrix, clipping negative rounding noise.
pub fn sqrt_psd(h: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    Ok(eigh(h)?.reconstruct_with(|l| l.max(0.0).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::bipartite::swap_operator;

    fn residual(h: &ComplexMatrix, e: &Eigh) -> f64 {
        (h - &e.reconstruct()).max_abs()
    }

    fn unitarity_defect(v: &ComplexMatrix) -> f64 {
        (&v.adjoint().matmul(v) - &ComplexMatrix::identity(v.rows())).max_abs()
    }

    #[test]
    fn diagonal_is_sorted() {
        let e = eigh(&ComplexMatrix::from_diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn pauli_x_spectrum() {
        let x = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let e = eigh(&x).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-15);
        assert!((e.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pauli_y_spectrum() {
        let y = ComplexMatrix::from_row_major(
            2,
            2,
            vec![ZERO, Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0), ZERO],
        )
        .unwrap();
        let e = eigh(&y).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-15);
        assert!(residual(&y, &e) < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(eigh(&m), Err(LinalgError::NotHermitian(_))));
    }

    #[test]
    fn swap_norms() {
        let f = swap_operator(3);
        assert!((op_norm(&f).unwrap() - 1.0).abs() < 1e-14);
        // F/d has d(d+1)/2 eigenvalues +1/d and d(d-1)/2 eigenvalues -1/d
        assert!((trace_norm(&f.scale(1.0 / 3.0)).unwrap() - 3.0).abs() < 1e-13);
    }

    #[test]
    fn sparse_components_stay_sparse() {
        // zero rows never enter a rotation
        let mut h = ComplexMatrix::zeros(4, 4);
        h[(0, 0)] = Complex64::new(1.0, 0.0);
        h[(0, 2)] = Complex64::new(0.5, 0.5);
        h[(2, 0)] = Complex64::new(0.5, -0.5);
        h[(2, 2)] = Complex64::new(2.0, 0.0);
        let e = eigh(&h).unwrap();
        for k in 0..4 {
            let col = e.vector(k);
            let support: Vec<usize> = (0..4).filter(|&i| col[i].norm() > 0.0).collect();
            assert!(support.iter().all(|&i| i == 0 || i == 2) || support == vec![1] || support == vec![3]);
        }
        assert!(residual(&h, &e) < 1e-14);
    }

    #[test]
    fn sqrt_squares_back() {
        let h = ComplexMatrix::from_real(2, 2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let s = sqrt_psd(&h).unwrap();
        assert!((&s.matmul(&s) - &h).max_abs() < 1e-14);
    }

    #[test]
    fn psd_check() {
        assert!(is_psd(&ComplexMatrix::identity(3), 0.0).unwrap());
        assert!(!is_psd(&ComplexMatrix::from_diag(&[1.0, -1e-3]), 1e-9).unwrap());
        assert!(unitarity_defect(&ComplexMatrix::identity(2)) == 0.0);
    }
}
