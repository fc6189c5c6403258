//! Right-looking blocked Cholesky for the dense Schur complement.

use nalgebra::DMatrix;

const BLOCK: usize = 64;

/// Overwrites the lower triangle of `a` with `L` where `a = L·Lᵀ`.
///
/// Returns the index of the first non-positive pivot on failure.
pub fn cholesky_in_place(a: &mut DMatrix<f64>) -> Result<(), usize> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let ld = n;
    let data = a.as_mut_slice();
    let at = |i: usize, j: usize| i + j * ld;

    let mut k = 0;
    while k < n {
        let kb = BLOCK.min(n - k);
        // diagonal block
        for j in k..k + kb {
            let mut d = data[at(j, j)];
            for p in k..j {
                let l = data[at(j, p)];
                d -= l * l;
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(j);
            }
            let d = d.sqrt();
            data[at(j, j)] = d;
            for i in (j + 1)..(k + kb) {
                let mut s = data[at(i, j)];
                for p in k..j {
                    s -= data[at(i, p)] * data[at(j, p)];
                }
                data[at(i, j)] = s / d;
            }
        }
        let rest = n - k - kb;
        if rest > 0 {
            // panel: A21 ← A21 · L11⁻ᵀ
            for j in k..k + kb {
                let d = data[at(j, j)];
                for p in k..j {
                    let ljp = data[at(j, p)];
                    if ljp != 0.0 {
                        for i in (k + kb)..n {
                            data[at(i, j)] -= data[at(i, p)] * ljp;
                        }
                    }
                }
                for i in (k + kb)..n {
                    data[at(i, j)] /= d;
                }
            }
            // trailing update: A22 ← A22 − A21·A21ᵀ
            let base = data.as_mut_ptr();
            // SAFETY: A21 (rows k+kb.., cols k..k+kb) and A22 (rows and cols k+kb..)
            // are disjoint regions of the same column-major buffer of size ld·n.
            unsafe {
                let a21 = base.add(at(k + kb, k)) as *const f64;
                let a22 = base.add(at(k + kb, k + kb));
                matrixmultiply::dgemm(
                    rest, kb, rest, -1.0, a21, 1, ld as isize, a21, ld as isize, 1, 1.0, a22, 1, ld as isize,
                );
            }
        }
        k += kb;
    }
    for j in 1..n {
        for i in 0..j {
            data[at(i, j)] = 0.0;
        }
    }
    Ok(())
}

/// Solves `L·Lᵀ·x = b` in place given the factor from [`cholesky_in_place`].
pub fn cholesky_solve(l: &DMatrix<f64>, b: &mut [f64]) {
    let n = l.nrows();
    let data = l.as_slice();
    for j in 0..n {
        let col = &data[j * n..(j + 1) * n];
        b[j] /= col[j];
        let xj = b[j];
        for i in (j + 1)..n {
            b[i] -= col[i] * xj;
        }
    }
    for j in (0..n).rev() {
        let col = &data[j * n..(j + 1) * n];
        let mut s = b[j];
        for i in (j + 1)..n {
            s -= col[i] * b[i];
        }
        b[j] = s / col[j];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize) -> DMatrix<f64> {
        let g = DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 13) % 11) as f64 / 11.0 - 0.4);
        &g * g.transpose() + DMatrix::identity(n, n) * (n as f64)
    }

    #[test]
    fn factors_across_block_boundaries() {
        for n in [1, 5, 64, 65, 150] {
            let a = spd(n);
            let mut l = a.clone();
            cholesky_in_place(&mut l).unwrap();
            let err = (&l * l.transpose() - &a).amax();
            assert!(err < 1e-10 * a.amax(), "n={n} err={err}");
            let rhs: Vec<f64> = (0..n).map(|i| i as f64 - 2.0).collect();
            let mut x = rhs.clone();
            cholesky_solve(&l, &mut x);
            let back = &a * nalgebra::DVector::from_vec(x);
            for i in 0..n {
                assert!((back[i] - rhs[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn reports_indefinite_pivot() {
        let mut a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(cholesky_in_place(&mut a), Err(1));
    }
}
