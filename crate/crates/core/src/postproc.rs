//! Summaries of posterior draws: pointwise median and CV, MAP and MLE point
//! estimates, predictive residual quantiles, and moment magnitude.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::FaultMesh;
use crate::greens::GreensMatrix;
use crate::posterior::{LikelihoodSpec, MtnDistribution};
use crate::sampler::Draws;
use crate::stats;

/// Subfaults whose mean slip magnitude is below this get no CV.
pub const CV_MEAN_FLOOR: f64 = 1e-6;

pub fn pointwise_median(draws: &Draws) -> Result<DVector<f64>> {
    if draws.is_empty() {
        return Err(Error::EmptyChain);
    }
    Ok(DVector::from_fn(draws.dim(), |j, _| {
        stats::median(&draws.column(j))
    }))
}

/// `√(d_s² + d_d²)` per subfault.
pub fn slip_magnitudes(slip: &[f64]) -> Vec<f64> {
    slip.chunks_exact(2).map(|c| c[0].hypot(c[1])).collect()
}

/// Coefficient of variation (percent) of the per-draw slip magnitude, using
/// the unbiased standard deviation. `None` where the mean is below
/// [`CV_MEAN_FLOOR`].
pub fn pointwise_cv(draws: &Draws) -> Result<Vec<Option<f64>>> {
    if draws.is_empty() {
        return Err(Error::EmptyChain);
    }
    let m = draws.dim() / 2;
    let mut per_subfault = vec![Vec::with_capacity(draws.len()); m];
    for row in draws.rows() {
        for (i, s) in slip_magnitudes(row).into_iter().enumerate() {
            per_subfault[i].push(s);
        }
    }
    Ok(per_subfault
        .iter()
        .map(|v| {
            let mean = stats::mean(v);
            (mean >= CV_MEAN_FLOOR).then(|| 100.0 * stats::variance(v).sqrt() / mean)
        })
        .collect())
}

pub const MAP_TOLERANCE: f64 = 1e-8;
const MAP_MAX_SWEEPS: usize = 200_000;
const MAP_POLISH_EVERY: usize = 25;

/// Largest projected-step length `|x_i − clamp(x_i − g_i/A_ii)|`.
fn kkt_residual(x: &[f64], g: &[f64], diag: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    (0..x.len())
        .map(|i| (x[i] - (x[i] - g[i] / diag[i]).clamp(lo[i], hi[i])).abs())
        .fold(0.0, f64::max)
}

fn objective(a: &DMatrix<f64>, mu: &DVector<f64>, x: &DVector<f64>) -> f64 {
    let d = x - mu;
    0.5 * d.dot(&(a * &d))
}

/// Box-constrained mode of the truncated normal: argmin of
/// `(D − μ)ᵀ A (D − μ)` over the box.
///
/// Projected coordinate descent, periodically accelerated by solving the
/// unconstrained problem on the current free set. Converged when every
/// projected coordinate step, measured in units of `1/A_ii`, is at most
/// [`MAP_TOLERANCE`].
pub fn map_estimate(target: &MtnDistribution) -> Result<DVector<f64>> {
    let n = target.dim();
    let a = target.precision();
    let mu = target.mean();
    let lo = target.lower().as_slice();
    let hi = target.upper().as_slice();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    let mut x = DVector::from_fn(n, |i, _| mu[i].clamp(lo[i], hi[i]));
    let mut g = a * (&x - mu);
    let mut residual = kkt_residual(x.as_slice(), g.as_slice(), &diag, lo, hi);
    for sweep in 0..MAP_MAX_SWEEPS {
        if residual <= MAP_TOLERANCE {
            // one exact solve on the identified free set removes the
            // remaining coordinate-descent error
            if let Some(p) = free_set_polish(target, &x, &g) {
                let gp = a * (&p - mu);
                if kkt_residual(p.as_slice(), gp.as_slice(), &diag, lo, hi) <= residual
                    && objective(a, mu, &p) <= objective(a, mu, &x)
                {
                    return Ok(p);
                }
            }
            return Ok(x);
        }
        for i in 0..n {
            let new = (x[i] - g[i] / diag[i]).clamp(lo[i], hi[i]);
            let delta = new - x[i];
            if delta != 0.0 {
                x[i] = new;
                g.axpy(delta, &a.column(i), 1.0);
            }
        }
        if sweep % MAP_POLISH_EVERY == 0 {
            if let Some(p) = free_set_polish(target, &x, &g) {
                if objective(a, mu, &p) <= objective(a, mu, &x) {
                    x = p;
                }
            }
        }
        g = a * (&x - mu);
        residual = kkt_residual(x.as_slice(), g.as_slice(), &diag, lo, hi);
    }
    Err(Error::NonConvergence {
        iterations: MAP_MAX_SWEEPS,
        residual,
    })
}

/// Exact minimizer on the free set with bound coordinates held fixed,
/// projected back into the box.
fn free_set_polish(
    target: &MtnDistribution,
    x: &DVector<f64>,
    g: &DVector<f64>,
) -> Option<DVector<f64>> {
    let (a, mu, lo, hi) = (
        target.precision(),
        target.mean(),
        target.lower(),
        target.upper(),
    );
    let n = x.len();
    let free: Vec<usize> = (0..n)
        .filter(|&i| {
            let at_lo = x[i] <= lo[i] && g[i] >= 0.0;
            let at_hi = x[i] >= hi[i] && g[i] <= 0.0;
            !(at_lo || at_hi)
        })
        .collect();
    if free.is_empty() {
        return None;
    }
    let fixed: Vec<usize> = (0..n).filter(|i| !free.contains(i)).collect();
    let aff = DMatrix::from_fn(free.len(), free.len(), |r, c| a[(free[r], free[c])]);
    // A_FF (x_F − μ_F) = −A_FB (x_B − μ_B)
    let rhs = DVector::from_fn(free.len(), |r, _| {
        -fixed
            .iter()
            .map(|&b| a[(free[r], b)] * (x[b] - mu[b]))
            .sum::<f64>()
    });
    let sol = aff.cholesky()?.solve(&rhs);
    let mut out = x.clone();
    for (r, &i) in free.iter().enumerate() {
        out[i] = (mu[i] + sol[r]).clamp(lo[i], hi[i]);
    }
    Some(out)
}

/// `1e-12 · trace(XᵀAX) / (2M)`.
pub fn default_ridge(x: &GreensMatrix, likelihood: &LikelihoodSpec) -> f64 {
    let prec = likelihood.noise_precision(x.entries().nrows());
    let e = x.entries();
    let trace: f64 = (0..e.ncols())
        .map(|j| {
            (0..e.nrows())
                .map(|i| prec[i] * e[(i, j)].powi(2))
                .sum::<f64>()
        })
        .sum();
    1e-12 * trace / e.ncols() as f64
}

/// Minimizer of `(Y − XD)ᵀ A (Y − XD) + ridge ‖D‖²`, via the SVD of the
/// whitened operator. With `ridge = 0` this is the minimum-norm least-squares
/// solution. A comparison baseline, not part of the Bayesian pipeline.
pub fn mle_estimate(
    y: &DVector<f64>,
    x: &GreensMatrix,
    likelihood: &LikelihoodSpec,
    ridge: f64,
) -> Result<DVector<f64>> {
    let e = x.entries();
    if e.nrows() != y.len() {
        return Err(Error::Shape(format!(
            "X has {} rows, Y has {}",
            e.nrows(),
            y.len()
        )));
    }
    if !(ridge.is_finite() && ridge >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ridge must be non-negative, got {ridge}"
        )));
    }
    let root = likelihood.noise_precision(y.len()).map(f64::sqrt);
    let mut b = e.clone();
    for (r, mut row) in b.row_iter_mut().enumerate() {
        row *= root[r];
    }
    let yw = y.component_mul(&root);
    let svd = b.svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => {
            return Err(Error::Factorization {
                what: "whitened forward operator (SVD)".into(),
                condition: f64::NAN,
            })
        }
    };
    let s = &svd.singular_values;
    let cutoff = s.max() * f64::EPSILON * e.nrows().max(e.ncols()) as f64;
    let uty = u.transpose() * yw;
    let coeff = DVector::from_fn(s.len(), |k, _| {
        if ridge == 0.0 && s[k] <= cutoff {
            0.0
        } else {
            s[k] * uty[k] / (s[k] * s[k] + ridge)
        }
    });
    Ok(vt.transpose() * coeff)
}

/// Shear modulus and the slip threshold defining the effective rupture area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeParams {
    /// Pa.
    pub rigidity: f64,
    /// m.
    pub slip_floor: f64,
}

impl Default for MagnitudeParams {
    fn default() -> Self {
        Self {
            rigidity: 32e9,
            slip_floor: 0.01,
        }
    }
}

impl MagnitudeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rigidity.is_finite() && self.rigidity > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rigidity must be positive, got {}",
                self.rigidity
            )));
        }
        if !(self.slip_floor.is_finite() && self.slip_floor >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "slip floor must be non-negative, got {}",
                self.slip_floor
            )));
        }
        Ok(())
    }
}

/// `M₀ = μ Σ A_i s_i` over subfaults with `s_i ≥ floor`, in N·m.
pub fn seismic_moment(slip: &[f64], mesh: &FaultMesh, params: &MagnitudeParams) -> Result<f64> {
    if slip.len() != mesh.slip_dim() {
        return Err(Error::Shape(format!(
            "slip of length {} for {} subfaults",
            slip.len(),
            mesh.len()
        )));
    }
    let sum: f64 = slip_magnitudes(slip)
        .into_iter()
        .zip(mesh.areas())
        .filter(|(s, _)| *s >= params.slip_floor)
        .map(|(s, a)| s * a)
        .sum();
    Ok(params.rigidity * sum)
}

/// `M_w = (2/3)(log₁₀ M₀ − 9.1)`.
pub fn moment_magnitude(slip: &[f64], mesh: &FaultMesh, params: &MagnitudeParams) -> Result<f64> {
    params.validate()?;
    let m0 = seismic_moment(slip, mesh, params)?;
    if m0 <= 0.0 {
        return Err(Error::UndefinedMagnitude {
            floor: params.slip_floor,
        });
    }
    Ok(2.0 / 3.0 * (m0.log10() - 9.1))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MwPosterior {
    /// Per-draw magnitudes, in draw order, undefined draws skipped.
    pub values: Vec<f64>,
    pub excluded: usize,
    pub median: f64,
    pub q025: f64,
    pub q975: f64,
    /// Magnitude of the pointwise median slip.
    pub at_median_slip: Option<f64>,
    pub at_map: Option<f64>,
}

impl MwPosterior {
    pub fn contains(&self, mw: f64) -> bool {
        self.q025 <= mw && mw <= self.q975
    }
}

/// Magnitude of each draw, plus point values at the median slip and, when
/// given, at the MAP slip.
pub fn mw_posterior(
    draws: &Draws,
    mesh: &FaultMesh,
    params: &MagnitudeParams,
    map: Option<&DVector<f64>>,
) -> Result<MwPosterior> {
    params.validate()?;
    let median_slip = pointwise_median(draws)?;
    let mut values = Vec::with_capacity(draws.len());
    let mut excluded = 0;
    for row in draws.rows() {
        match moment_magnitude(row, mesh, params) {
            Ok(v) => values.push(v),
            Err(Error::UndefinedMagnitude { .. }) => excluded += 1,
            Err(e) => return Err(e),
        }
    }
    if values.is_empty() {
        return Err(Error::UndefinedMagnitude {
            floor: params.slip_floor,
        });
    }
    let point = |slip: &DVector<f64>| match moment_magnitude(slip.as_slice(), mesh, params) {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedMagnitude { .. }) => Ok(None),
        Err(e) => Err(e),
    };
    let sorted = stats::sorted(&values);
    Ok(MwPosterior {
        median: stats::quantile_sorted(&sorted, 0.5),
        q025: stats::quantile_sorted(&sorted, 0.025),
        q975: stats::quantile_sorted(&sorted, 0.975),
        at_median_slip: point(&median_slip)?,
        at_map: map.map(point).transpose()?.flatten(),
        values,
        excluded,
    })
}

/// Per-observation quantiles `(0.025, 0.5, 0.975)` of `Y − X D⁽ᵗ⁾`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualQuantiles {
    pub q025: DVector<f64>,
    pub q50: DVector<f64>,
    pub q975: DVector<f64>,
}

pub fn predictive_residuals(
    draws: &Draws,
    y: &DVector<f64>,
    x: &GreensMatrix,
) -> Result<ResidualQuantiles> {
    if draws.is_empty() {
        return Err(Error::EmptyChain);
    }
    let e = x.entries();
    if e.nrows() != y.len() || e.ncols() != draws.dim() {
        return Err(Error::Shape(format!(
            "X is {}x{}, Y has {} rows, draws have dim {}",
            e.nrows(),
            e.ncols(),
            y.len(),
            draws.dim()
        )));
    }
    let n = y.len();
    let mut per_obs = vec![Vec::with_capacity(draws.len()); n];
    for t in 0..draws.len() {
        let r = y - e * draws.row_vector(t);
        for (k, v) in r.iter().enumerate() {
            per_obs[k].push(*v);
        }
    }
    let sorted: Vec<Vec<f64>> = per_obs.iter().map(|v| stats::sorted(v)).collect();
    let q = |p: f64| DVector::from_fn(n, |k, _| stats::quantile_sorted(&sorted[k], p));
    Ok(ResidualQuantiles {
        q025: q(0.025),
        q50: q(0.5),
        q975: q(0.975),
    })
}
