//! Optimal directional Gibbs (ODG) sampling of multivariate truncated normals.
//!
//! Each iteration draws `b ~ Beta(2, 9)` and `p ~ U(0, 1)`; with probability
//! `mixing_probability` a direction is picked from the eigenvector family
//! (weights `λ_i^{-b}`), otherwise from the covariance-column family
//! (weights `P_i^{-b}`). The step length is then drawn exactly from the
//! full conditional along that line, a univariate truncated normal with
//! mean `−eᵀA(x − μ)/(eᵀAe)` and precision `eᵀAe`, so every move is accepted.

mod conditional;
mod directions;
mod draws;
mod gibbs;
pub mod truncnorm;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;

pub use conditional::{conditional_mtn, insert_coordinate};
pub use directions::{
    direction_weights_covcol, direction_weights_eigen, precompute_directions, DirectionFamily,
    DirectionSet, RHO_SQ_FLOOR,
};
pub use draws::Draws;
pub use gibbs::run_coordinate_gibbs;
pub use truncnorm::sample_truncated_normal_1d;

use crate::diagnostics::CoordinateDiagnostics;
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::posterior::MtnDistribution;

/// Steps between exact recomputations of the cached gradient `A(x − μ)`.
const GRADIENT_REFRESH: u64 = 1024;

/// Relative distance kept from each finite bound by the default start.
pub const START_MARGIN: f64 = 1e-8;

pub type ChainRng = ChaCha20Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    /// Retained draws.
    pub sample_count: usize,
    /// Iterations discarded before the first retained draw.
    pub burn_in: usize,
    /// Iterations per retained draw.
    pub thin: usize,
    pub seed: u64,
    pub mixing_probability: f64,
    pub beta_shape: (f64, f64),
}

impl SamplerConfig {
    /// Defaults: burn-in 10% of `sample_count`, no thinning, mixing 0.5, Beta(2, 9).
    pub fn new(sample_count: usize, seed: u64) -> Self {
        Self {
            sample_count,
            burn_in: sample_count / 10,
            thin: 1,
            seed,
            mixing_probability: 0.5,
            beta_shape: (2.0, 9.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::InvalidParameter("thin must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.mixing_probability) {
            return Err(Error::InvalidParameter(format!(
                "mixing_probability must be in [0, 1], got {}",
                self.mixing_probability
            )));
        }
        let (a, b) = self.beta_shape;
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "invalid beta shape ({a}, {b})"
            )));
        }
        Ok(())
    }

    fn beta(&self) -> Result<Beta<f64>> {
        Beta::new(self.beta_shape.0, self.beta_shape.1)
            .map_err(|e| Error::InvalidParameter(format!("beta distribution: {e}")))
    }
}

#[derive(Debug, Clone)]
pub struct ChainResult {
    pub draws: Draws,
    /// Per-coordinate ESS and integrated autocorrelation time of `draws`.
    pub diagnostics: Vec<CoordinateDiagnostics>,
    /// Iterations that moved along an eigenvector direction.
    pub eigen_moves: u64,
    /// Iterations that moved along a covariance-column direction.
    pub covcol_moves: u64,
    pub steps: u64,
    pub seed: u64,
}

impl ChainResult {
    fn finish(draws: Draws, eigen_moves: u64, covcol_moves: u64, steps: u64, seed: u64) -> Self {
        let diagnostics = (0..draws.dim())
            .map(|j| CoordinateDiagnostics::of(&draws.column(j)))
            .collect();
        Self {
            draws,
            diagnostics,
            eigen_moves,
            covcol_moves,
            steps,
            seed,
        }
    }

    /// Smallest per-coordinate ESS (NaN coordinates ignored).
    pub fn min_ess(&self) -> f64 {
        self.diagnostics
            .iter()
            .map(|d| d.ess)
            .filter(|v| !v.is_nan())
            .fold(f64::INFINITY, f64::min)
    }
}

/// `(c, d)`: the range of `r` keeping `x + r e` inside `[lower, upper]`.
pub fn line_bounds(x: &[f64], e: &[f64], lower: &[f64], upper: &[f64]) -> Result<(f64, f64)> {
    if x.len() != e.len() || x.len() != lower.len() || x.len() != upper.len() {
        return Err(Error::Shape(
            "line_bounds arguments differ in length".into(),
        ));
    }
    if let Some(k) = (0..x.len()).find(|&k| !(lower[k] < x[k] && x[k] < upper[k])) {
        return Err(Error::OutsideBox(format!(
            "coordinate {k}: {} not inside ({}, {})",
            x[k], lower[k], upper[k]
        )));
    }
    Ok(line_bounds_unchecked(x, e, lower, upper))
}

#[inline]
fn line_bounds_unchecked(x: &[f64], e: &[f64], lower: &[f64], upper: &[f64]) -> (f64, f64) {
    let mut c = f64::NEG_INFINITY;
    let mut d = f64::INFINITY;
    for k in 0..x.len() {
        let ek = e[k];
        if ek > 0.0 {
            c = c.max((lower[k] - x[k]) / ek);
            d = d.min((upper[k] - x[k]) / ek);
        } else if ek < 0.0 {
            c = c.max((upper[k] - x[k]) / ek);
            d = d.min((lower[k] - x[k]) / ek);
        }
    }
    (c, d)
}

/// `(μ_r, τ_r)` with `μ_r = −eᵀA(x − μ)/(eᵀAe)` and `τ_r = eᵀAe`.
pub fn line_conditional(x: &[f64], e: &[f64], target: &MtnDistribution) -> (f64, f64) {
    let a = target.precision();
    let ev = DVector::from_column_slice(e);
    let ae = a * &ev;
    let diff = DVector::from_column_slice(x) - target.mean();
    let tau = ev.dot(&ae);
    (-ae.dot(&diff) / tau, tau)
}

/// Target mean clamped into the box interior.
///
/// Each finite bound is kept at distance `START_MARGIN · width` (or
/// `START_MARGIN · max(1, |bound|)` for half-infinite coordinates).
pub fn default_start(target: &MtnDistribution) -> DVector<f64> {
    DVector::from_fn(target.dim(), |k, _| {
        let (a, b) = (target.lower()[k], target.upper()[k]);
        let m = target.mean()[k];
        let width = b - a;
        let (lo, hi) = if width.is_finite() {
            (a + START_MARGIN * width, b - START_MARGIN * width)
        } else {
            let lo = if a.is_finite() {
                a + START_MARGIN * a.abs().max(1.0)
            } else {
                a
            };
            let hi = if b.is_finite() {
                b - START_MARGIN * b.abs().max(1.0)
            } else {
                b
            };
            (lo, hi)
        };
        if lo < hi {
            m.clamp(lo, hi)
        } else {
            0.5 * a + 0.5 * b
        }
    })
}

fn check_box(target: &MtnDistribution) -> Result<()> {
    for k in 0..target.dim() {
        if !(target.lower()[k] < target.upper()[k]) {
            return Err(Error::Validation(format!(
                "empty or inverted box in coordinate {k}"
            )));
        }
    }
    Ok(())
}

/// Mutable ODG chain over a shared target and direction set.
pub struct OdgChain<'a> {
    target: &'a MtnDistribution,
    directions: &'a DirectionSet,
    config: SamplerConfig,
    beta: Beta<f64>,
    rng: ChainRng,
    x: Vec<f64>,
    gradient: Vec<f64>,
    weights: Vec<f64>,
    candidate: Vec<f64>,
    steps: u64,
    eigen_moves: u64,
    covcol_moves: u64,
}

impl<'a> OdgChain<'a> {
    pub fn new(
        target: &'a MtnDistribution,
        directions: &'a DirectionSet,
        config: SamplerConfig,
        start: Option<DVector<f64>>,
    ) -> Result<Self> {
        config.validate()?;
        check_box(target)?;
        if directions.dim() != target.dim() {
            return Err(Error::Shape(
                "direction set and target differ in dimension".into(),
            ));
        }
        let x = start.unwrap_or_else(|| default_start(target));
        if !target.contains_strictly(x.as_slice()) {
            return Err(Error::OutsideBox(
                "starting point not strictly inside the box".into(),
            ));
        }
        let mut chain = Self {
            target,
            directions,
            config,
            beta: config.beta()?,
            rng: ChainRng::seed_from_u64(config.seed),
            x: x.as_slice().to_vec(),
            gradient: vec![0.0; target.dim()],
            weights: Vec::with_capacity(target.dim()),
            candidate: vec![0.0; target.dim()],
            steps: 0,
            eigen_moves: 0,
            covcol_moves: 0,
        };
        chain.refresh_gradient();
        Ok(chain)
    }

    pub fn state(&self) -> &[f64] {
        &self.x
    }

    fn refresh_gradient(&mut self) {
        let diff = DVector::from_column_slice(&self.x) - self.target.mean();
        let g = self.target.precision() * diff;
        self.gradient.copy_from_slice(g.as_slice());
    }

    /// One ODG iteration; returns the family used.
    pub fn step(&mut self) -> DirectionFamily {
        let b = self.beta.sample(&mut self.rng);
        let p: f64 = self.rng.random();
        let family = if p < self.config.mixing_probability {
            DirectionFamily::Eigen
        } else {
            DirectionFamily::CovarianceColumn
        };
        directions::power_weights_into(self.directions.log_values(family), b, &mut self.weights);
        let i = categorical(&self.weights, &mut self.rng);
        match family {
            DirectionFamily::Eigen => self.eigen_moves += 1,
            DirectionFamily::CovarianceColumn => self.covcol_moves += 1,
        }

        let e = self.directions.direction(family, i);
        let ae = self.directions.image(family, i);
        let tau = self.directions.tau(family, i);
        let mu_r = -dot(e, &self.gradient) / tau;
        let lower = self.target.lower().as_slice();
        let upper = self.target.upper().as_slice();
        let (c, d) = line_bounds_unchecked(&self.x, e, lower, upper);

        for _ in 0..8 {
            let r = sample_truncated_normal_1d(mu_r, tau, c, d, &mut self.rng);
            let mut inside = true;
            for k in 0..self.x.len() {
                let v = self.x[k] + r * e[k];
                inside &= lower[k] < v && v < upper[k];
                self.candidate[k] = v;
            }
            if inside {
                std::mem::swap(&mut self.x, &mut self.candidate);
                for (g, a) in self.gradient.iter_mut().zip(ae) {
                    *g += r * a;
                }
                break;
            }
        }
        debug_assert!(self.target.contains_strictly(&self.x));

        self.steps += 1;
        if self.steps.is_multiple_of(GRADIENT_REFRESH) {
            self.refresh_gradient();
        }
        family
    }

    /// Burn-in, then `sample_count` draws each `thin` iterations apart.
    pub fn run(mut self) -> ChainResult {
        for _ in 0..self.config.burn_in {
            self.step();
        }
        let mut draws = Draws::with_capacity(self.target.dim(), self.config.sample_count);
        for _ in 0..self.config.sample_count {
            for _ in 0..self.config.thin {
                self.step();
            }
            draws.push(&self.x);
        }
        ChainResult::finish(
            draws,
            self.eigen_moves,
            self.covcol_moves,
            self.steps,
            self.config.seed,
        )
    }
}

fn categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// One ODG move from `x`, using a caller-supplied RNG.
pub fn odg_step<R: Rng + ?Sized>(
    x: &DVector<f64>,
    target: &MtnDistribution,
    directions: &DirectionSet,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<DVector<f64>> {
    config.validate()?;
    let seed: u64 = rng.random();
    let mut chain = OdgChain::new(
        target,
        directions,
        SamplerConfig { seed, ..*config },
        Some(x.clone()),
    )?;
    chain.step();
    Ok(DVector::from_column_slice(chain.state()))
}

/// Precomputes directions and runs one chain from the default start.
pub fn run_chain(target: &MtnDistribution, config: &SamplerConfig) -> Result<ChainResult> {
    let directions = precompute_directions(target)?;
    run_chain_with(target, &directions, config, None)
}

pub fn run_chain_with(
    target: &MtnDistribution,
    directions: &DirectionSet,
    config: &SamplerConfig,
    start: Option<DVector<f64>>,
) -> Result<ChainResult> {
    Ok(OdgChain::new(target, directions, *config, start)?.run())
}

/// Independent chains, one per seed, over a shared target.
pub fn run_chains(
    target: &MtnDistribution,
    config: &SamplerConfig,
    seeds: &[u64],
) -> Result<Vec<ChainResult>> {
    let directions = precompute_directions(target)?;
    seeds
        .par_iter()
        .map(|&seed| {
            run_chain_with(
                target,
                &directions,
                &SamplerConfig { seed, ..*config },
                None,
            )
        })
        .collect()
}
