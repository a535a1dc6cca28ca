use alloc::vec::Vec;

use super::{check_symmetric, CovarianceMatrix, EigenSpectrum, Matrix};
use crate::error::{Error, Result};

/// Convergence threshold on the off-diagonal norm, relative to `‖A‖_F`.
pub const JACOBI_REL_TOL: f64 = 1e-11;

/// Sweep cap for the cyclic Jacobi iteration.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues of a covariance matrix, descending.
pub fn sym_eigenvalues(cov: &CovarianceMatrix) -> Result<EigenSpectrum> {
    jacobi_in_place(cov.matrix().clone())
}

/// Eigenvalues of an arbitrary symmetric matrix, descending.
///
/// Fails with [`Error::InvalidInput`] when `m` is not symmetric to within
/// [`super::SYMMETRY_TOL`].
pub fn jacobi_eigenvalues(m: &Matrix) -> Result<EigenSpectrum> {
    check_symmetric(m)?;
    jacobi_in_place(m.clone())
}

/// Cyclic Jacobi rotations on a full symmetric copy.
///
/// Each sweep visits every pair `p < q` in row order. A rotation is skipped
/// when `|a_pq|` is already below `tol / (2n)`; the iteration stops once the
/// off-diagonal Frobenius norm is below `JACOBI_REL_TOL · ‖A‖_F`.
fn jacobi_in_place(mut a: Matrix) -> Result<EigenSpectrum> {
    let n = a.rows();
    let norm = libm::sqrt(a.frobenius_norm_sq());
    if norm == 0.0 || n == 1 {
        return EigenSpectrum::new(diagonal(&a));
    }
    let tol = JACOBI_REL_TOL * norm;
    let skip = 0.5 * tol / n as f64;

    for sweep in 0..JACOBI_MAX_SWEEPS {
        let off = off_diagonal_norm(&a);
        if off < tol {
            return EigenSpectrum::new(diagonal(&a));
        }
        // early sweeps only rotate entries above the current RMS off-diagonal
        let threshold = if sweep < 3 {
            skip.max(off / n as f64)
        } else {
            skip
        };
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= threshold {
                    continue;
                }
                rotate(&mut a, p, q, apq);
            }
        }
    }
    if off_diagonal_norm(&a) < tol {
        return EigenSpectrum::new(diagonal(&a));
    }
    Err(Error::Convergence {
        sweeps: JACOBI_MAX_SWEEPS,
    })
}

/// Annihilates `a[p][q]` with a plane rotation, keeping `a` symmetric.
#[inline]
fn rotate(a: &mut Matrix, p: usize, q: usize, apq: f64) {
    let n = a.rows();
    let app = a.get(p, p);
    let aqq = a.get(q, q);
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta >= 0.0 {
        1.0 / (theta + libm::sqrt(theta * theta + 1.0))
    } else {
        -1.0 / (-theta + libm::sqrt(theta * theta + 1.0))
    };
    let c = 1.0 / libm::sqrt(t * t + 1.0);
    let s = t * c;

    let data = a.as_mut_slice();
    let (row_p, row_q) = {
        let (lo, hi) = data.split_at_mut(q * n);
        (&mut lo[p * n..(p + 1) * n], &mut hi[..n])
    };
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = row_p[r];
        let arq = row_q[r];
        row_p[r] = c * arp - s * arq;
        row_q[r] = s * arp + c * arq;
    }
    row_p[p] = app - t * apq;
    row_q[q] = aqq + t * apq;
    row_p[q] = 0.0;
    row_q[p] = 0.0;
    // mirror the two updated rows into their columns
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let vp = data[p * n + r];
        let vq = data[q * n + r];
        data[r * n + p] = vp;
        data[r * n + q] = vq;
    }
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let v = a.get(i, j);
            sum += v * v;
        }
    }
    libm::sqrt(2.0 * sum)
}

fn diagonal(a: &Matrix) -> Vec<f64> {
    (0..a.rows()).map(|i| a.get(i, i)).collect()
}
