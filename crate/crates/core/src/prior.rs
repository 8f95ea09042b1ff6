//! Truncated Gaussian-process prior on the interleaved slip vector.
//!
//! Prior precision (before the `1/σ_β²` scale) is `A₀ = β W C⁻¹ W β`, where
//! `C` is a Matérn (ν = 3/2) correlation matrix with separate lengths for the
//! strike and dip components and zero strike–dip cross correlation, `W` is a
//! diagonal depth penalty and `β = I_M ⊗ diag(β_s, β_d)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::FaultMesh;
use crate::linalg;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaternParams {
    /// Strike-component correlation length, meters.
    pub lambda_s: f64,
    /// Dip-component correlation length, meters.
    pub lambda_d: f64,
    pub gamma_sq: f64,
}

impl MaternParams {
    pub fn new(lambda_s: f64, lambda_d: f64) -> Result<Self> {
        let p = Self {
            lambda_s,
            lambda_d,
            gamma_sq: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_s", self.lambda_s),
            ("lambda_d", self.lambda_d),
            ("gamma_sq", self.gamma_sq),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub beta_s: f64,
    pub beta_d: f64,
    /// Depth below which slip is penalized, meters.
    pub z_lim: f64,
    /// `(a_s, b_s)`, meters.
    pub bounds_s: (f64, f64),
    /// `(a_d, b_d)`, meters.
    pub bounds_d: (f64, f64),
    pub sigma_beta_sq: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self {
            beta_s: 1.0,
            beta_d: 0.2,
            z_lim: 50_000.0,
            bounds_s: (-0.1, 0.1),
            bounds_d: (-0.0804, 0.4),
            sigma_beta_sq: 2e-4,
        }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("beta_s", self.beta_s),
            ("beta_d", self.beta_d),
            ("sigma_beta_sq", self.sigma_beta_sq),
            ("z_lim", self.z_lim),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        for (name, (a, b)) in [("bounds_s", self.bounds_s), ("bounds_d", self.bounds_d)] {
            if a.is_nan() || b.is_nan() || a >= b {
                return Err(Error::InvalidParameter(format!(
                    "{name} must satisfy lower < upper, got ({a}, {b})"
                )));
            }
        }
        Ok(())
    }

    /// Interleaved lower bounds `1_M ⊗ [a_s, a_d]`.
    pub fn lower_bounds(&self, m: usize) -> DVector<f64> {
        DVector::from_fn(2 * m, |k, _| {
            if k % 2 == 0 {
                self.bounds_s.0
            } else {
                self.bounds_d.0
            }
        })
    }

    /// Interleaved upper bounds `1_M ⊗ [b_s, b_d]`.
    pub fn upper_bounds(&self, m: usize) -> DVector<f64> {
        DVector::from_fn(2 * m, |k, _| {
            if k % 2 == 0 {
                self.bounds_s.1
            } else {
                self.bounds_d.1
            }
        })
    }

    fn component_beta(&self, k: usize) -> f64 {
        if k.is_multiple_of(2) {
            self.beta_s
        } else {
            self.beta_d
        }
    }
}

/// Dense symmetric positive-definite precision matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionMatrix {
    entries: DMatrix<f64>,
}

impl PrecisionMatrix {
    /// Validates symmetry (1e-12 relative) and positive definiteness.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if !linalg::is_symmetric(&entries, 1e-12) {
            return Err(Error::Validation(
                "precision matrix is not symmetric".into(),
            ));
        }
        linalg::cholesky(&entries, "precision matrix")?;
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.entries
    }
}

/// Matérn ν = 3/2 correlation `γ² (1 + √3 d/λ) exp(−√3 d/λ)`.
pub fn matern_correlation(dist: f64, lambda: f64, gamma_sq: f64) -> Result<f64> {
    if !(dist >= 0.0) || !(lambda > 0.0) || !(gamma_sq > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "matern_correlation needs dist >= 0, lambda > 0, gamma_sq > 0; got ({dist}, {lambda}, {gamma_sq})"
        )));
    }
    Ok(matern_unchecked(dist, lambda, gamma_sq))
}

#[inline]
fn matern_unchecked(dist: f64, lambda: f64, gamma_sq: f64) -> f64 {
    let r = SQRT_3 * dist / lambda;
    if r.is_infinite() {
        return 0.0;
    }
    gamma_sq * (1.0 + r) * (-r).exp()
}

/// Interleaved `2M × 2M` correlation matrix with exact zero strike–dip blocks.
pub fn build_correlation_matrix(mesh: &FaultMesh, params: &MaternParams) -> Result<DMatrix<f64>> {
    params.validate()?;
    let m = mesh.len();
    let mut c = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in i..m {
            let d = mesh.distance(i, j);
            let cs = matern_unchecked(d, params.lambda_s, params.gamma_sq);
            let cd = matern_unchecked(d, params.lambda_d, params.gamma_sq);
            c[(2 * i, 2 * j)] = cs;
            c[(2 * j, 2 * i)] = cs;
            c[(2 * i + 1, 2 * j + 1)] = cd;
            c[(2 * j + 1, 2 * i + 1)] = cd;
        }
    }
    Ok(c)
}

/// Per-subfault depth weight: 1 above `z_lim`, `1 + 0.5 (depth − z_lim)/1000` below.
pub fn depth_weight(depth: f64, z_lim: f64) -> f64 {
    if depth > z_lim {
        1.0 + 0.5 * (depth - z_lim) / 1e3
    } else {
        1.0
    }
}

/// Diagonal of `W` (length `2M`), each subfault weight repeated for both components.
pub fn build_weight_matrix(mesh: &FaultMesh, z_lim: f64) -> Result<DVector<f64>> {
    if !(z_lim > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "z_lim must be positive, got {z_lim}"
        )));
    }
    Ok(DVector::from_fn(mesh.slip_dim(), |k, _| {
        depth_weight(mesh.depths()[k / 2], z_lim)
    }))
}

/// `A₀ = β W C⁻¹ W β` with `W` given by its diagonal.
///
/// When the strike–dip cross blocks of `C` are exactly zero, `C⁻¹` is formed
/// from two `M × M` Cholesky factorizations; otherwise from the full matrix.
/// No jitter is ever added.
pub fn build_prior_precision(
    correlation: &DMatrix<f64>,
    weights: &DVector<f64>,
    spec: &PriorSpec,
) -> Result<PrecisionMatrix> {
    let n = correlation.nrows();
    if !correlation.is_square() || !n.is_multiple_of(2) || weights.len() != n {
        return Err(Error::Shape(format!(
            "correlation {}x{} with {} weights",
            correlation.nrows(),
            correlation.ncols(),
            weights.len()
        )));
    }
    if !linalg::is_symmetric(correlation, 1e-12) {
        return Err(Error::Validation(
            "correlation matrix is not symmetric".into(),
        ));
    }
    let c_inv = if cross_blocks_zero(correlation) {
        blockwise_inverse(correlation)?
    } else {
        linalg::spd_inverse(&linalg::cholesky(correlation, "correlation matrix")?)
    };
    let scale = DVector::from_fn(n, |k, _| spec.component_beta(k) * weights[k]);
    let a0 = DMatrix::from_fn(n, n, |i, j| scale[i] * c_inv[(i, j)] * scale[j]);
    PrecisionMatrix::new(linalg::symmetrized(&a0))
}

fn cross_blocks_zero(c: &DMatrix<f64>) -> bool {
    let n = c.nrows();
    (0..n).all(|i| ((i + 1) % 2..n).step_by(2).all(|j| c[(i, j)] == 0.0))
}

fn blockwise_inverse(c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = c.nrows() / 2;
    let mut inv = DMatrix::zeros(2 * m, 2 * m);
    for (comp, name) in [
        (0usize, "strike correlation block"),
        (1, "dip correlation block"),
    ] {
        let block = DMatrix::from_fn(m, m, |i, j| c[(2 * i + comp, 2 * j + comp)]);
        let block_inv = linalg::spd_inverse(&linalg::cholesky(&block, name)?);
        for i in 0..m {
            for j in 0..m {
                inv[(2 * i + comp, 2 * j + comp)] = block_inv[(i, j)];
            }
        }
    }
    Ok(inv)
}

/// Everything needed to evaluate and sample the truncated prior.
#[derive(Debug, Clone)]
pub struct Prior {
    pub spec: PriorSpec,
    pub a0: PrecisionMatrix,
}

impl Prior {
    pub fn build(mesh: &FaultMesh, params: &MaternParams, spec: &PriorSpec) -> Result<Self> {
        spec.validate()?;
        let c = build_correlation_matrix(mesh, params)?;
        let w = build_weight_matrix(mesh, spec.z_lim)?;
        Ok(Self {
            spec: *spec,
            a0: build_prior_precision(&c, &w, spec)?,
        })
    }

    /// Prior as a truncated normal: mean 0, precision `A₀/σ_β²`, box bounds.
    pub fn as_mtn(&self) -> Result<crate::posterior::MtnDistribution> {
        let n = self.a0.dim();
        crate::posterior::MtnDistribution::new(
            DVector::zeros(n),
            self.a0.entries() / self.spec.sigma_beta_sq,
            self.spec.lower_bounds(n / 2),
            self.spec.upper_bounds(n / 2),
        )
    }
}

/// `−DᵀA₀D / (2σ_β²)` inside the box, `−∞` outside; normalizer omitted.
pub fn prior_log_density_unnormalized(
    slip: &DVector<f64>,
    a0: &PrecisionMatrix,
    spec: &PriorSpec,
) -> Result<f64> {
    let n = a0.dim();
    if slip.len() != n {
        return Err(Error::Shape(format!(
            "slip of length {} for prior of dim {n}",
            slip.len()
        )));
    }
    let inside = slip.iter().enumerate().all(|(k, &v)| {
        let (a, b) = if k % 2 == 0 {
            spec.bounds_s
        } else {
            spec.bounds_d
        };
        a <= v && v <= b
    });
    if !inside {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(-slip.dot(&(a0.entries() * slip)) / (2.0 * spec.sigma_beta_sq))
}
