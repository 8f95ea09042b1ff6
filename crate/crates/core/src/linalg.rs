//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalue-ratio condition estimate `|λ|max / |λ|min` of a symmetric matrix.
pub fn condition_estimate(matrix: &DMatrix<f64>) -> f64 {
    if matrix.nrows() == 0 || matrix.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    let eig = SymmetricEigen::new(symmetrized(matrix));
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for &v in eig.eigenvalues.iter() {
        lo = lo.min(v.abs());
        hi = hi.max(v.abs());
    }
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Cholesky factorization; failure is reported with a condition estimate.
pub fn cholesky(matrix: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::Factorization {
            what: what.to_string(),
            condition: f64::INFINITY,
        });
    }
    Cholesky::new(matrix.clone()).ok_or_else(|| Error::Factorization {
        what: what.to_string(),
        condition: condition_estimate(matrix),
    })
}

/// `(M + Mᵀ) / 2`.
pub fn symmetrized(matrix: &DMatrix<f64>) -> DMatrix<f64> {
    (matrix + matrix.transpose()) * 0.5
}

/// Symmetric to `tol` relative to the largest absolute entry (floored at 1).
pub fn is_symmetric(matrix: &DMatrix<f64>, tol: f64) -> bool {
    if !matrix.is_square() {
        return false;
    }
    let scale = matrix.amax().max(1.0);
    let n = matrix.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            if (matrix[(i, j)] - matrix[(j, i)]).abs() > tol * scale {
                return false;
            }
        }
    }
    true
}

/// `ln det` from a Cholesky factor.
pub fn log_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol
        .l_dirty()
        .diagonal()
        .iter()
        .map(|v| v.ln())
        .sum::<f64>()
}

/// Symmetric inverse through the Cholesky factor.
pub fn spd_inverse(chol: &Cholesky<f64, Dyn>) -> DMatrix<f64> {
    symmetrized(&chol.inverse())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
