use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::posterior::MtnDistribution;

/// Distribution of the remaining `n − 1` coordinates given `x_i = value`.
///
/// Precision: `A` without row/column `i`. Mean:
/// `μ₋ᵢ − A₋ᵢ,₋ᵢ⁻¹ A₋ᵢ,ᵢ (value − μᵢ)`. Bounds restricted accordingly.
pub fn conditional_mtn(
    target: &MtnDistribution,
    index: usize,
    value: f64,
) -> Result<MtnDistribution> {
    let n = target.dim();
    if index >= n {
        return Err(Error::InvalidParameter(format!(
            "index {index} out of range for dimension {n}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(
            "cannot condition a one-dimensional target".into(),
        ));
    }
    let (lo, hi) = (target.lower()[index], target.upper()[index]);
    if !(lo <= value && value <= hi) {
        return Err(Error::OutsideBox(format!(
            "conditioning value {value} outside [{lo}, {hi}] for coordinate {index}"
        )));
    }
    let keep: Vec<usize> = (0..n).filter(|&k| k != index).collect();
    let a = target.precision();
    let sub = DMatrix::from_fn(n - 1, n - 1, |r, c| a[(keep[r], keep[c])]);
    let cross = DVector::from_fn(n - 1, |r, _| a[(keep[r], index)]);
    let chol = linalg::cholesky(&sub, "conditional precision")?;
    let shift = chol.solve(&cross) * (value - target.mean()[index]);
    let mean = DVector::from_fn(n - 1, |r, _| target.mean()[keep[r]] - shift[r]);
    MtnDistribution::new(
        mean,
        sub,
        DVector::from_fn(n - 1, |r, _| target.lower()[keep[r]]),
        DVector::from_fn(n - 1, |r, _| target.upper()[keep[r]]),
    )
}

/// Reinserts the conditioned coordinate into a reduced-dimension point.
pub fn insert_coordinate(reduced: &[f64], index: usize, value: f64) -> DVector<f64> {
    let mut v = Vec::with_capacity(reduced.len() + 1);
    v.extend_from_slice(&reduced[..index]);
    v.push(value);
    v.extend_from_slice(&reduced[index..]);
    DVector::from_vec(v)
}
