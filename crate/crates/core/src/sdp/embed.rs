//! Complex Hermitian programs via the real embedding
//! `H ↦ [[Re H, −Im H], [Im H, Re H]]`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::problem::{BlockSpec, ConeKind, SdpProblem, Sense, SparseSym};
use super::solver::{solve_with, BlockValue, SolverOptions, Status};
use super::SdpError;
use crate::linalg::{ComplexMatrix, LinalgError, HERMITIAN_TOL};

/// The 2n×2n real symmetric embedding of a Hermitian matrix.
pub fn embed_hermitian(h: &ComplexMatrix) -> Result<DMatrix<f64>, LinalgError> {
    let h = h.to_hermitian()?;
    let n = h.rows();
    Ok(DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let v = h[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => v.re,
            (true, false) => -v.im,
            (false, true) => v.im,
        }
    }))
}

/// Upper-triangle triplets of the embedding of a Hermitian matrix.
pub(crate) fn embed_sparse(h: &ComplexMatrix) -> SparseSym {
    let n = h.rows();
    let mut s = SparseSym::new();
    for r in 0..n {
        for c in r..n {
            let v = h[(r, c)];
            if v.re != 0.0 {
                s.entries.push((r, c, v.re));
                s.entries.push((r + n, c + n, v.re));
            }
            if v.im != 0.0 && r != c {
                // (r, c+n) holds −Im H[r][c]; (c, r+n) holds −Im H[c][r] = Im H[r][c]
                s.entries.push((r, c + n, -v.im));
                s.entries.push((c, r + n, v.im));
            }
        }
    }
    s.compress();
    s
}

/// Inverse of the embedding for an arbitrary real symmetric 2n×2n block:
/// the Hermitian X with `⟨embed A, Y⟩ = 2·Re⟨A, X⟩` for every Hermitian A.
pub fn unembed(y: &DMatrix<f64>) -> ComplexMatrix {
    let n = y.nrows() / 2;
    ComplexMatrix::from_fn(n, n, |r, c| {
        let re = 0.5 * (y[(r, c)] + y[(r + n, c + n)]);
        let im = 0.5 * (y[(r + n, c)] - y[(r, c + n)]);
        Complex64::new(re, im)
    })
}

/// A block of a complex program: Hermitian PSD of side `n`, or `n` nonnegative reals.
pub type HermitianBlock = BlockSpec;

/// Conic program over Hermitian PSD blocks with real objective `Re⟨C, X⟩`
/// and constraints `Re⟨A_i, X⟩ = b_i`. Nonneg blocks use the real diagonal
/// of their matrices.
#[derive(Debug, Clone)]
pub struct HermitianProblem {
    pub blocks: Vec<HermitianBlock>,
    pub objective: Vec<ComplexMatrix>,
    pub constraints: Vec<(Vec<(usize, ComplexMatrix)>, f64)>,
    pub sense: Sense,
}

#[derive(Debug, Clone)]
pub struct HermitianSolution {
    pub status: Status,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub x: Vec<ComplexMatrix>,
    pub y: Vec<f64>,
    pub iterations: usize,
}

impl HermitianProblem {
    pub fn new(blocks: Vec<HermitianBlock>, sense: Sense) -> Self {
        let objective = blocks.iter().map(|b| ComplexMatrix::zeros(b.size, b.size)).collect();
        Self { blocks, objective, constraints: Vec::new(), sense }
    }

    /// The real program over embedded blocks. Every constraint right-hand
    /// side is doubled so that its optimal value is twice this one's.
    pub fn to_real(&self) -> Result<SdpProblem, SdpError> {
        let conv = |blk: usize, m: &ComplexMatrix| -> Result<SparseSym, SdpError> {
            let spec = self
                .blocks
                .get(blk)
                .ok_or_else(|| SdpError::IllPosed(format!("block index {blk} out of range")))?;
            if m.rows() != spec.size || m.cols() != spec.size {
                return Err(SdpError::IllPosed(format!("matrix for block {blk} has the wrong size")));
            }
            if !m.is_hermitian(HERMITIAN_TOL) {
                return Err(SdpError::Linalg(LinalgError::NotHermitian(m.hermitian_deviation())));
            }
            Ok(match spec.kind {
                ConeKind::Psd => embed_sparse(m),
                ConeKind::Nonneg => {
                    let mut s = SparseSym::new();
                    for k in 0..spec.size {
                        if m[(k, k)].re != 0.0 {
                            s.entries.push((k, k, m[(k, k)].re));
                        }
                    }
                    s
                }
            })
        };
        let blocks = self
            .blocks
            .iter()
            .map(|b| match b.kind {
                ConeKind::Psd => BlockSpec { size: 2 * b.size, kind: ConeKind::Psd },
                ConeKind::Nonneg => *b,
            })
            .collect();
        let mut p = SdpProblem::new(blocks, self.sense);
        if self.objective.len() != self.blocks.len() {
            return Err(SdpError::IllPosed("objective must have one matrix per block".into()));
        }
        for (b, c) in self.objective.iter().enumerate() {
            p.objective[b] = conv(b, c)?;
        }
        for (a, rhs) in &self.constraints {
            let a = a.iter().map(|(blk, m)| Ok((*blk, conv(*blk, m)?))).collect::<Result<Vec<_>, SdpError>>()?;
            p.add_constraint(a, 2.0 * rhs);
        }
        Ok(p)
    }

    /// Solves through the embedding and reports un-doubled values.
    pub fn solve(&self, opts: &SolverOptions) -> Result<HermitianSolution, SdpError> {
        let real = self.to_real()?;
        let s = solve_with(&real, opts)?;
        let x = s
            .x
            .iter()
            .map(|b| match b {
                BlockValue::Dense(y) => unembed(y),
                BlockValue::Diagonal(d) => ComplexMatrix::from_diag(&d.iter().map(|v| 0.5 * v).collect::<Vec<_>>()),
            })
            .collect();
        Ok(HermitianSolution {
            status: s.status,
            primal_value: 0.5 * s.primal_value,
            dual_value: 0.5 * s.dual_value,
            gap: s.gap,
            x,
            y: s.y,
            iterations: s.iterations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigvalsh;

    #[test]
    fn real_input_embeds_block_diagonally() {
        let h = ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 2.0, 3.0]).unwrap();
        let e = embed_hermitian(&h).unwrap();
        let expect = DMatrix::from_row_slice(
            4,
            4,
            &[1.0, 2.0, 0.0, 0.0, 2.0, 3.0, 0.0, 0.0, 0.0, 0.0, 1.0, 2.0, 0.0, 0.0, 2.0, 3.0],
        );
        assert_eq!(e, expect);
    }

    #[test]
    fn pauli_y_eigenvalues_double() {
        let i = Complex64::new(0.0, 1.0);
        let y = ComplexMatrix::from_row_major(2, 2, vec![Complex64::new(0.0, 0.0), -i, i, Complex64::new(0.0, 0.0)])
            .unwrap();
        let e = embed_hermitian(&y).unwrap();
        let mut ev: Vec<f64> = nalgebra::SymmetricEigen::new(e).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let oracle = eigvalsh(&y).unwrap();
        let doubled: Vec<f64> = oracle.iter().flat_map(|&l| [l, l]).collect();
        for (a, b) in ev.iter().zip(&doubled) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[3] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(embed_hermitian(&m).is_err());
    }

    #[test]
    fn sparse_embedding_matches_dense() {
        let h = ComplexMatrix::from_fn(3, 3, |r, c| {
            let a = (r * 3 + c) as f64;
            let b = (c * 3 + r) as f64;
            Complex64::new(a + b, if r == c { 0.0 } else { a - b })
        });
        let dense = embed_hermitian(&h).unwrap();
        assert_eq!(embed_sparse(&h).to_dense(6), dense);
        assert!((&unembed(&dense) - &h).max_abs() < 1e-15);
    }
}
