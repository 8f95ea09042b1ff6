//! Gaussian likelihood and the conjugate multivariate truncated normal posterior.

use std::sync::OnceLock;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};
use crate::geometry::ObservationVector;
use crate::greens::GreensMatrix;
use crate::linalg;
use crate::prior::{PrecisionMatrix, PriorSpec};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Per-axis observation noise; `Σ = I_N ⊗ diag(σ_x², σ_y², σ_z²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodSpec {
    pub axis_sigmas: [f64; 3],
}

impl LikelihoodSpec {
    pub fn new(axis_sigmas: [f64; 3]) -> Result<Self> {
        if axis_sigmas.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "axis sigmas must be positive, got {axis_sigmas:?}"
            )));
        }
        Ok(Self { axis_sigmas })
    }

    /// Diagonal of the noise precision `A = Σ⁻¹` for `n_obs = 3N` rows.
    pub fn noise_precision(&self, n_obs: usize) -> DVector<f64> {
        DVector::from_fn(n_obs, |k, _| 1.0 / self.axis_sigmas[k % 3].powi(2))
    }
}

impl From<&ObservationVector> for LikelihoodSpec {
    fn from(obs: &ObservationVector) -> Self {
        Self {
            axis_sigmas: obs.axis_sigmas(),
        }
    }
}

fn check_shapes(slip: &DVector<f64>, y: &DVector<f64>, x: &GreensMatrix) -> Result<()> {
    let e = x.entries();
    if e.nrows() != y.len() || e.ncols() != slip.len() {
        return Err(Error::Shape(format!(
            "X is {}x{}, Y has {} rows, D has {} rows",
            e.nrows(),
            e.ncols(),
            y.len(),
            slip.len()
        )));
    }
    Ok(())
}

/// `−(3N/2) ln 2π + ½ ln|A| − ½ (Y − XD)ᵀ A (Y − XD)`.
pub fn log_likelihood(
    slip: &DVector<f64>,
    y: &DVector<f64>,
    x: &GreensMatrix,
    spec: &LikelihoodSpec,
) -> Result<f64> {
    check_shapes(slip, y, x)?;
    let n_obs = y.len();
    let prec = spec.noise_precision(n_obs);
    let resid = y - x.entries() * slip;
    let quad: f64 = resid.iter().zip(prec.iter()).map(|(r, a)| a * r * r).sum();
    let log_det: f64 = prec.iter().map(|a| a.ln()).sum();
    Ok(-0.5 * n_obs as f64 * LN_2PI + 0.5 * log_det - 0.5 * quad)
}

/// Multivariate normal `N(mean, precision⁻¹)` restricted to `[lower, upper]`.
///
/// The density is never normalized. Covariance, correlation and the
/// eigendecomposition of the precision are computed lazily and cached.
#[derive(Debug)]
pub struct MtnDistribution {
    mean: DVector<f64>,
    precision: DMatrix<f64>,
    lower: DVector<f64>,
    upper: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    covariance: OnceLock<DMatrix<f64>>,
    eigen: OnceLock<SymmetricEigen<f64, Dyn>>,
}

impl Clone for MtnDistribution {
    fn clone(&self) -> Self {
        Self {
            mean: self.mean.clone(),
            precision: self.precision.clone(),
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            chol: self.chol.clone(),
            covariance: self.covariance.clone(),
            eigen: self.eigen.clone(),
        }
    }
}

impl MtnDistribution {
    pub fn new(
        mean: DVector<f64>,
        precision: DMatrix<f64>,
        lower: DVector<f64>,
        upper: DVector<f64>,
    ) -> Result<Self> {
        let n = mean.len();
        if n == 0 || precision.nrows() != n || precision.ncols() != n {
            return Err(Error::Shape(format!(
                "mean of length {n} with {}x{} precision",
                precision.nrows(),
                precision.ncols()
            )));
        }
        if lower.len() != n || upper.len() != n {
            return Err(Error::Shape(format!(
                "bounds of length {}/{} for dimension {n}",
                lower.len(),
                upper.len()
            )));
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite mean".into()));
        }
        for k in 0..n {
            if lower[k].is_nan() || upper[k].is_nan() || !(lower[k] < upper[k]) {
                return Err(Error::Validation(format!(
                    "empty or inverted box in coordinate {k}: ({}, {})",
                    lower[k], upper[k]
                )));
            }
        }
        if !linalg::is_symmetric(&precision, 1e-12) {
            return Err(Error::Validation("precision is not symmetric".into()));
        }
        let chol = linalg::cholesky(&precision, "MTN precision")?;
        Ok(Self {
            mean,
            precision,
            lower,
            upper,
            chol,
            covariance: OnceLock::new(),
            eigen: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    pub fn cholesky(&self) -> &Cholesky<f64, Dyn> {
        &self.chol
    }

    /// `precision⁻¹`, by triangular inversion of the cached factor.
    pub fn covariance(&self) -> &DMatrix<f64> {
        self.covariance
            .get_or_init(|| linalg::spd_inverse(&self.chol))
    }

    pub fn correlation(&self) -> DMatrix<f64> {
        let cov = self.covariance();
        let sd: Vec<f64> = cov.diagonal().iter().map(|v| v.sqrt()).collect();
        DMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            if i == j {
                1.0
            } else {
                cov[(i, j)] / (sd[i] * sd[j])
            }
        })
    }

    pub fn eigen(&self) -> &SymmetricEigen<f64, Dyn> {
        self.eigen
            .get_or_init(|| SymmetricEigen::new(self.precision.clone()))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .enumerate()
                .all(|(k, &v)| self.lower[k] <= v && v <= self.upper[k])
    }

    pub fn contains_strictly(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .enumerate()
                .all(|(k, &v)| self.lower[k] < v && v < self.upper[k])
    }

    /// `−½ (x − μ)ᵀ A (x − μ)` inside the box, `−∞` outside.
    pub fn log_density_unnormalized(&self, x: &DVector<f64>) -> f64 {
        if !self.contains(x.as_slice()) {
            return f64::NEG_INFINITY;
        }
        let d = x - &self.mean;
        -0.5 * d.dot(&(&self.precision * &d))
    }

    /// Same distribution with every bound replaced.
    pub fn with_bounds(&self, lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        Self::new(self.mean.clone(), self.precision.clone(), lower, upper)
    }
}

/// Posterior precision `XᵀAX + A₀/σ_β²` and mean `A_p⁻¹ XᵀAY`, with the
/// prior box copied to every subfault.
pub fn build_posterior(
    y: &DVector<f64>,
    x: &GreensMatrix,
    likelihood: &LikelihoodSpec,
    a0: &PrecisionMatrix,
    spec: &PriorSpec,
) -> Result<MtnDistribution> {
    let xe = x.entries();
    if xe.nrows() != y.len() || xe.ncols() != a0.dim() {
        return Err(Error::Shape(format!(
            "X is {}x{}, Y has {} rows, A0 is {}x{}",
            xe.nrows(),
            xe.ncols(),
            y.len(),
            a0.dim(),
            a0.dim()
        )));
    }
    spec.validate()?;
    let noise = likelihood.noise_precision(y.len());
    // A X with A diagonal
    let mut ax = xe.clone();
    for (r, mut row) in ax.row_iter_mut().enumerate() {
        row *= noise[r];
    }
    let xtax = xe.transpose() * &ax;
    let precision = linalg::symmetrized(&(xtax + a0.entries() / spec.sigma_beta_sq));
    let rhs = ax.transpose() * y;
    let chol = linalg::cholesky(&precision, "posterior precision")?;
    let mean = chol.solve(&rhs);
    let m = a0.dim() / 2;
    MtnDistribution::new(mean, precision, spec.lower_bounds(m), spec.upper_bounds(m))
}
