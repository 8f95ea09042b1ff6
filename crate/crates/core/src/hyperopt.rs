//! Marginal-posterior objective for the variance hyperparameters `σ²` and `σ_β²`.
//!
//! With `σ²A = Σ⁻¹` and `D ~ N(0, (A₀/σ_β²)⁻¹)`, the data marginal is
//! `Y ~ N(0, Σ_py)` with `Σ_py = A⁻¹σ² + X A₀⁻¹ Xᵀ σ_β²`. Inverse-Gamma priors on
//! both variances give the objective
//!
//! ```text
//! ℓ = ln det Σ_py + Yᵀ Σ_py⁻¹ Y + (a_β+1) ln σ_β² + b_β/σ_β² + (a+1) ln σ² + b/σ²
//! ```
//!
//! which is minimized over a log grid and refined by golden-section search.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::GreensMatrix;
use crate::linalg;
use crate::posterior::LikelihoodSpec;
use crate::prior::PrecisionMatrix;

/// Inverse-Gamma shape/scale constants for `σ²` (`a`, `b`) and `σ_β²` (`a_beta`, `b_beta`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperPriors {
    pub a: f64,
    pub b: f64,
    pub a_beta: f64,
    pub b_beta: f64,
}

impl Default for HyperPriors {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: 1.0,
            a_beta: 1.0,
            b_beta: 1.0,
        }
    }
}

impl HyperPriors {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("a", self.a),
            ("b", self.b),
            ("a_beta", self.a_beta),
            ("b_beta", self.b_beta),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "hyperprior {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Minimizer of `(a_β+1) ln s + b_β/s`.
    pub fn prior_mode_sigma_beta_sq(&self) -> f64 {
        self.b_beta / (self.a_beta + 1.0)
    }
}

/// `A⁻¹σ² + X A₀⁻¹ Xᵀ σ_β²`; `σ_β² = 0` is accepted for evaluation.
pub fn marginal_covariance(
    sigma_sq: f64,
    sigma_beta_sq: f64,
    x: &DMatrix<f64>,
    a_unit_noise: &DMatrix<f64>,
    a0: &PrecisionMatrix,
) -> Result<DMatrix<f64>> {
    check_variances(sigma_sq, sigma_beta_sq, true)?;
    let noise_cov = linalg::spd_inverse(&linalg::cholesky(a_unit_noise, "noise precision")?);
    let g = prior_image(x, a0)?;
    Ok(linalg::symmetrized(
        &(noise_cov * sigma_sq + g * sigma_beta_sq),
    ))
}

fn check_variances(sigma_sq: f64, sigma_beta_sq: f64, allow_zero_beta: bool) -> Result<()> {
    if !(sigma_sq.is_finite() && sigma_sq > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma_sq must be positive, got {sigma_sq}"
        )));
    }
    let beta_ok = if allow_zero_beta {
        sigma_beta_sq >= 0.0
    } else {
        sigma_beta_sq > 0.0
    };
    if !(sigma_beta_sq.is_finite() && beta_ok) {
        return Err(Error::InvalidParameter(format!(
            "sigma_beta_sq must be positive, got {sigma_beta_sq}"
        )));
    }
    Ok(())
}

/// `X A₀⁻¹ Xᵀ`.
fn prior_image(x: &DMatrix<f64>, a0: &PrecisionMatrix) -> Result<DMatrix<f64>> {
    if x.ncols() != a0.dim() {
        return Err(Error::Shape(format!(
            "X has {} columns, A0 is {}",
            x.ncols(),
            a0.dim()
        )));
    }
    let chol = linalg::cholesky(a0.entries(), "prior precision")?;
    let solved = chol.solve(&x.transpose());
    Ok(linalg::symmetrized(&(x * solved)))
}

/// `ℓ(σ², σ_β²)` with `X A₀⁻¹ Xᵀ` and `A⁻¹` cached.
#[derive(Debug, Clone)]
pub struct MarginalObjective {
    y: DVector<f64>,
    noise_cov: DMatrix<f64>,
    prior_image: DMatrix<f64>,
    priors: HyperPriors,
}

impl MarginalObjective {
    pub fn new(
        y: &DVector<f64>,
        x: &DMatrix<f64>,
        a_unit_noise: &DMatrix<f64>,
        a0: &PrecisionMatrix,
        priors: HyperPriors,
    ) -> Result<Self> {
        priors.validate()?;
        let n = y.len();
        if x.nrows() != n || a_unit_noise.shape() != (n, n) {
            return Err(Error::Shape(format!(
                "Y has {n} rows, X is {}x{}, A is {}x{}",
                x.nrows(),
                x.ncols(),
                a_unit_noise.nrows(),
                a_unit_noise.ncols()
            )));
        }
        Ok(Self {
            y: y.clone(),
            noise_cov: linalg::spd_inverse(&linalg::cholesky(a_unit_noise, "noise precision")?),
            prior_image: prior_image(x, a0)?,
            priors,
        })
    }

    /// Noise known from the data: `A = Σ⁻¹` at unit `σ²`.
    pub fn known_noise(
        y: &DVector<f64>,
        x: &GreensMatrix,
        likelihood: &LikelihoodSpec,
        a0: &PrecisionMatrix,
        priors: HyperPriors,
    ) -> Result<Self> {
        let a = DMatrix::from_diagonal(&likelihood.noise_precision(y.len()));
        Self::new(y, x.entries(), &a, a0, priors)
    }

    pub fn priors(&self) -> &HyperPriors {
        &self.priors
    }

    pub fn evaluate(&self, sigma_sq: f64, sigma_beta_sq: f64) -> Result<f64> {
        check_variances(sigma_sq, sigma_beta_sq, false)?;
        let cov = &self.noise_cov * sigma_sq + &self.prior_image * sigma_beta_sq;
        let chol = linalg::cholesky(&cov, "marginal covariance")?;
        let quad = self.y.dot(&chol.solve(&self.y));
        let p = &self.priors;
        Ok(linalg::log_det(&chol)
            + quad
            + (p.a_beta + 1.0) * sigma_beta_sq.ln()
            + p.b_beta / sigma_beta_sq
            + (p.a + 1.0) * sigma_sq.ln()
            + p.b / sigma_sq)
    }

    fn evaluate_or_inf(&self, sigma_sq: f64, sigma_beta_sq: f64) -> f64 {
        self.evaluate(sigma_sq, sigma_beta_sq)
            .unwrap_or(f64::INFINITY)
    }
}

/// Log-spaced search points over `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for LogGrid {
    fn default() -> Self {
        Self {
            lo: 1e-8,
            hi: 1e2,
            points: 50,
        }
    }
}

impl LogGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo > 0.0 && self.hi > self.lo && self.hi.is_finite() && self.points >= 2) {
            return Err(Error::InvalidParameter(format!(
                "log grid needs 0 < lo < hi and at least 2 points, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let (l, h) = (self.lo.ln(), self.hi.ln());
        let step = (h - l) / (self.points - 1) as f64;
        (0..self.points)
            .map(|k| {
                if k + 1 == self.points {
                    self.hi
                } else {
                    (l + step * k as f64).exp()
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Optimum1d {
    pub sigma_beta_sq: f64,
    pub value: f64,
    pub at_boundary: bool,
    /// `(σ_β², ℓ)` at every grid point; failed evaluations are `+∞`.
    pub grid: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Optimum2d {
    pub sigma_sq: f64,
    pub sigma_beta_sq: f64,
    pub value: f64,
    pub at_boundary: bool,
    /// `(σ², σ_β², ℓ)` at every grid point.
    pub grid: Vec<(f64, f64, f64)>,
}

const GOLDEN_TOL: f64 = 1e-10;
const GOLDEN_MAX_ITER: usize = 200;

/// Golden-section search for a minimum of `f(exp(t))` over `t ∈ [ln lo, ln hi]`.
fn golden_log<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c.exp()), f(d.exp()));
    for _ in 0..GOLDEN_MAX_ITER {
        if (b - a).abs() < GOLDEN_TOL {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c.exp());
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d.exp());
        }
    }
    if fc <= fd {
        (c.exp(), fc)
    } else {
        (d.exp(), fd)
    }
}

fn argmin(values: &[f64]) -> Option<usize> {
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
}

fn bracket(grid: &[f64], k: usize) -> (f64, f64) {
    (grid[k.saturating_sub(1)], grid[(k + 1).min(grid.len() - 1)])
}

/// Minimize `ℓ(σ², ·)` at fixed `σ²`.
pub fn optimize_sigma_beta(
    objective: &MarginalObjective,
    sigma_sq: f64,
    grid: &LogGrid,
) -> Result<Optimum1d> {
    grid.validate()?;
    check_variances(sigma_sq, 1.0, false)?;
    let xs = grid.values();
    let values: Vec<f64> = xs
        .par_iter()
        .map(|&s| objective.evaluate_or_inf(sigma_sq, s))
        .collect();
    let k = argmin(&values).ok_or(Error::NonConvergence {
        iterations: xs.len(),
        residual: f64::INFINITY,
    })?;
    let (lo, hi) = bracket(&xs, k);
    let (s, v) = golden_log(|s| objective.evaluate_or_inf(sigma_sq, s), lo, hi);
    let (best, value) = if v < values[k] {
        (s, v)
    } else {
        (xs[k], values[k])
    };
    Ok(Optimum1d {
        sigma_beta_sq: best,
        value,
        at_boundary: k == 0 || k + 1 == xs.len(),
        grid: xs.into_iter().zip(values).collect(),
    })
}

const POLISH_ROUNDS: usize = 6;

/// Minimize `ℓ` jointly: log-grid scan, then coordinate-wise golden-section polish.
pub fn optimize_both(
    objective: &MarginalObjective,
    sigma_grid: &LogGrid,
    sigma_beta_grid: &LogGrid,
) -> Result<Optimum2d> {
    sigma_grid.validate()?;
    sigma_beta_grid.validate()?;
    let ss = sigma_grid.values();
    let bs = sigma_beta_grid.values();
    let cells: Vec<(f64, f64)> = ss
        .iter()
        .flat_map(|&s| bs.iter().map(move |&b| (s, b)))
        .collect();
    let values: Vec<f64> = cells
        .par_iter()
        .map(|&(s, b)| objective.evaluate_or_inf(s, b))
        .collect();
    let k = argmin(&values).ok_or(Error::NonConvergence {
        iterations: cells.len(),
        residual: f64::INFINITY,
    })?;
    let (i, j) = (k / bs.len(), k % bs.len());
    let (s_lo, s_hi) = bracket(&ss, i);
    let (b_lo, b_hi) = bracket(&bs, j);
    let (mut s, mut b, mut v) = (ss[i], bs[j], values[k]);
    for _ in 0..POLISH_ROUNDS {
        let (s_new, v_s) = golden_log(|t| objective.evaluate_or_inf(t, b), s_lo, s_hi);
        if v_s < v {
            s = s_new;
            v = v_s;
        }
        let (b_new, v_b) = golden_log(|t| objective.evaluate_or_inf(s, t), b_lo, b_hi);
        if v_b < v {
            b = b_new;
            v = v_b;
        }
    }
    Ok(Optimum2d {
        sigma_sq: s,
        sigma_beta_sq: b,
        value: v,
        at_boundary: i == 0 || i + 1 == ss.len() || j == 0 || j + 1 == bs.len(),
        grid: cells
            .into_iter()
            .zip(values)
            .map(|((s, b), v)| (s, b, v))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn one_by_one() -> (DVector<f64>, DMatrix<f64>, DMatrix<f64>, PrecisionMatrix) {
        let one = DMatrix::from_element(1, 1, 1.0);
        (
            DVector::zeros(1),
            one.clone(),
            one.clone(),
            PrecisionMatrix::new(one).unwrap(),
        )
    }

    fn random_instance(
        rng: &mut ChaCha8Rng,
        n: usize,
        m: usize,
    ) -> (DVector<f64>, DMatrix<f64>, DMatrix<f64>, PrecisionMatrix) {
        let x = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
        let y = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let a = DMatrix::from_diagonal(&DVector::from_fn(n, |_, _| rng.random_range(0.5..2.0)));
        let b = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
        let a0 = PrecisionMatrix::new(linalg::symmetrized(
            &(&b * b.transpose() + DMatrix::identity(m, m)),
        ))
        .unwrap();
        (y, x, a, a0)
    }

    fn dense_ell(
        s2: f64,
        sb2: f64,
        y: &DVector<f64>,
        x: &DMatrix<f64>,
        a: &DMatrix<f64>,
        a0: &PrecisionMatrix,
        p: &HyperPriors,
    ) -> f64 {
        let cov = a.clone().try_inverse().unwrap() * s2
            + x * a0.entries().clone().try_inverse().unwrap() * x.transpose() * sb2;
        let det = cov.determinant();
        det.ln()
            + (y.transpose() * cov.try_inverse().unwrap() * y)[0]
            + (p.a_beta + 1.0) * sb2.ln()
            + p.b_beta / sb2
            + (p.a + 1.0) * s2.ln()
            + p.b / s2
    }

    #[test]
    fn degenerate_scalar_value() {
        let (y, x, a, a0) = one_by_one();
        let obj = MarginalObjective::new(&y, &x, &a, &a0, HyperPriors::default()).unwrap();
        let v = obj.evaluate(1.0, 1.0).unwrap();
        assert!((v - (2f64.ln() + 2.0)).abs() < 1e-14);
    }

    #[test]
    fn zero_operator_gives_noise_covariance() {
        let (_, _, a, a0) = one_by_one();
        let a = a * 4.0;
        let cov = marginal_covariance(2.0, 3.0, &DMatrix::zeros(1, 1), &a, &a0).unwrap();
        assert!((cov[(0, 0)] - 0.5).abs() < 1e-15);
        let (_, x, a, a0) = one_by_one();
        let cov = marginal_covariance(2.0, 0.0, &x, &a, &a0).unwrap();
        assert_eq!(cov[(0, 0)], 2.0);
    }

    #[test]
    fn barrier_as_sigma_vanishes() {
        let (y, x, a, a0) = one_by_one();
        let obj = MarginalObjective::new(&y, &x, &a, &a0, HyperPriors::default()).unwrap();
        let v1 = obj.evaluate(1e-3, 1.0).unwrap();
        let v2 = obj.evaluate(1e-6, 1.0).unwrap();
        assert!(v2 > v1 && v2 > 1e5);
        assert!(obj.evaluate(0.0, 1.0).is_err());
    }

    #[test]
    fn matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = HyperPriors {
            a: 1.5,
            b: 0.3,
            a_beta: 2.0,
            b_beta: 0.01,
        };
        for _ in 0..5 {
            let (y, x, a, a0) = random_instance(&mut rng, 6, 4);
            let obj = MarginalObjective::new(&y, &x, &a, &a0, p).unwrap();
            let (s2, sb2) = (rng.random_range(0.1..3.0), rng.random_range(0.01..2.0));
            let v = obj.evaluate(s2, sb2).unwrap();
            let o = dense_ell(s2, sb2, &y, &x, &a, &a0, &p);
            assert!((v - o).abs() <= 1e-10 * o.abs().max(1.0), "{v} vs {o}");
            let direct = marginal_covariance(s2, sb2, &x, &a, &a0).unwrap();
            let dense = a.clone().try_inverse().unwrap() * s2
                + &x * a0.entries().clone().try_inverse().unwrap() * x.transpose() * sb2;
            assert!((direct - dense).amax() < 1e-12);
        }
    }

    #[test]
    fn finite_difference_gradient_agrees_with_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = HyperPriors::default();
        let (y, x, a, a0) = random_instance(&mut rng, 5, 3);
        let obj = MarginalObjective::new(&y, &x, &a, &a0, p).unwrap();
        for _ in 0..5 {
            let (s2, sb2) = (rng.random_range(0.2..2.0), rng.random_range(0.2..2.0));
            let h = 1e-6;
            let fd = |f: &dyn Fn(f64, f64) -> f64| {
                (
                    (f(s2 + h, sb2) - f(s2 - h, sb2)) / (2.0 * h),
                    (f(s2, sb2 + h) - f(s2, sb2 - h)) / (2.0 * h),
                )
            };
            let ours = fd(&|s, b| obj.evaluate(s, b).unwrap());
            let oracle = fd(&|s, b| dense_ell(s, b, &y, &x, &a, &a0, &p));
            for (g, o) in [(ours.0, oracle.0), (ours.1, oracle.1)] {
                assert!((g - o).abs() <= 1e-5 * o.abs().max(1e-3), "{g} vs {o}");
            }
        }
    }

    #[test]
    fn log_grid_endpoints() {
        let v = LogGrid::default().values();
        assert_eq!(v.len(), 50);
        assert!((v[0] - 1e-8).abs() < 1e-22);
        assert_eq!(v[49], 1e2);
        assert!(v.windows(2).all(|w| w[0] < w[1]));
        assert!(LogGrid {
            lo: 1.0,
            hi: 1.0,
            points: 3
        }
        .validate()
        .is_err());
    }

    #[test]
    fn flat_objective_returns_prior_mode() {
        let (y, _, a, a0) = one_by_one();
        let p = HyperPriors {
            a: 1.0,
            b: 1.0,
            a_beta: 3.0,
            b_beta: 0.02,
        };
        let obj = MarginalObjective::new(&y, &DMatrix::zeros(1, 1), &a, &a0, p).unwrap();
        let opt = optimize_sigma_beta(&obj, 1.0, &LogGrid::default()).unwrap();
        let mode = p.prior_mode_sigma_beta_sq();
        assert!((opt.sigma_beta_sq - mode).abs() < 1e-6 * mode);
        assert!(!opt.at_boundary);
        assert!(opt.grid.iter().all(|&(_, v)| opt.value <= v));
    }

    #[test]
    fn separable_objective_two_dimensional() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 6;
        let y = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let a = DMatrix::from_diagonal(&DVector::from_fn(n, |_, _| rng.random_range(0.5..2.0)));
        let a0 = PrecisionMatrix::new(DMatrix::identity(2, 2)).unwrap();
        let p = HyperPriors {
            a: 2.0,
            b: 0.5,
            a_beta: 1.0,
            b_beta: 0.3,
        };
        let obj = MarginalObjective::new(&y, &DMatrix::zeros(n, 2), &a, &a0, p).unwrap();
        let opt = optimize_both(&obj, &LogGrid::default(), &LogGrid::default()).unwrap();
        let yay = (y.transpose() * &a * &y)[0];
        let s_star = (yay + p.b) / (n as f64 + p.a + 1.0);
        assert!(
            (opt.sigma_sq - s_star).abs() < 1e-5 * s_star,
            "{} vs {s_star}",
            opt.sigma_sq
        );
        let b_star = p.prior_mode_sigma_beta_sq();
        assert!((opt.sigma_beta_sq - b_star).abs() < 1e-5 * b_star);
        assert!(opt.grid.iter().all(|&(_, _, v)| opt.value <= v));
    }

    #[test]
    fn rejects_bad_priors() {
        let (y, x, a, a0) = one_by_one();
        let p = HyperPriors {
            a_beta: 0.0,
            ..HyperPriors::default()
        };
        assert!(MarginalObjective::new(&y, &x, &a, &a0, p).is_err());
    }
}
