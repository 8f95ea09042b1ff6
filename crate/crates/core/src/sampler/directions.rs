//! Direction ensembles for the optimal directional Gibbs sampler.
//!
//! Two families are precomputed once per target:
//! - unit eigenvectors `e_i` of the precision `A`, picked with probability
//!   `∝ λ_i^{-b}`;
//! - normalized covariance columns `e_i^c = Σ_{:,i} / ‖Σ_{:,i}‖`, picked with
//!   probability `∝ P_i^{-b}`, `P_i = −(1/2n) Σ_j ln ρ_ij²`.
//!
//! `A e` and `eᵀ A e` are cached for every direction so a sampler step costs
//! `O(n)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::posterior::MtnDistribution;

/// Floor applied to `ρ_ij²` before taking the logarithm.
pub const RHO_SQ_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionFamily {
    Eigen,
    CovarianceColumn,
}

#[derive(Debug, Clone)]
pub struct DirectionSet {
    /// Columns are unit eigenvectors of the precision.
    pub eigen_directions: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    /// Columns are unit-normalized covariance columns.
    pub cov_column_directions: DMatrix<f64>,
    pub p_weights: Vec<f64>,
    log_eigenvalues: Vec<f64>,
    log_p_weights: Vec<f64>,
    eigen_images: DMatrix<f64>,
    cov_images: DMatrix<f64>,
    eigen_tau: Vec<f64>,
    cov_tau: Vec<f64>,
}

impl DirectionSet {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn direction(&self, family: DirectionFamily, i: usize) -> &[f64] {
        match family {
            DirectionFamily::Eigen => column_slice(&self.eigen_directions, i),
            DirectionFamily::CovarianceColumn => column_slice(&self.cov_column_directions, i),
        }
    }

    /// `A e` for the given direction.
    pub fn image(&self, family: DirectionFamily, i: usize) -> &[f64] {
        match family {
            DirectionFamily::Eigen => column_slice(&self.eigen_images, i),
            DirectionFamily::CovarianceColumn => column_slice(&self.cov_images, i),
        }
    }

    /// `eᵀ A e` for the given direction.
    pub fn tau(&self, family: DirectionFamily, i: usize) -> f64 {
        match family {
            DirectionFamily::Eigen => self.eigen_tau[i],
            DirectionFamily::CovarianceColumn => self.cov_tau[i],
        }
    }

    pub(crate) fn log_values(&self, family: DirectionFamily) -> &[f64] {
        match family {
            DirectionFamily::Eigen => &self.log_eigenvalues,
            DirectionFamily::CovarianceColumn => &self.log_p_weights,
        }
    }
}

fn column_slice(m: &DMatrix<f64>, i: usize) -> &[f64] {
    let n = m.nrows();
    &m.as_slice()[i * n..(i + 1) * n]
}

/// Eigenpairs of the precision, normalized covariance columns, and `P_i`.
pub fn precompute_directions(target: &MtnDistribution) -> Result<DirectionSet> {
    let n = target.dim();
    let a = target.precision();
    let eig = target.eigen();
    let eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if let Some(bad) = eigenvalues.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::Eigen(format!(
            "non-positive or non-finite eigenvalue {bad}"
        )));
    }
    let mut eigen_directions = eig.eigenvectors.clone();
    normalize_columns(&mut eigen_directions)?;

    let cov = target.covariance();
    let mut cov_column_directions = cov.clone();
    normalize_columns(&mut cov_column_directions)?;

    let corr = target.correlation();
    let p_weights: Vec<f64> = (0..n)
        .map(|i| {
            let s: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| corr[(i, j)].powi(2).max(RHO_SQ_FLOOR).ln())
                .sum();
            (-s / (2.0 * n as f64)).max(f64::MIN_POSITIVE)
        })
        .collect();

    let eigen_images = a * &eigen_directions;
    let cov_images = a * &cov_column_directions;
    let tau = |dirs: &DMatrix<f64>, imgs: &DMatrix<f64>| -> Vec<f64> {
        (0..n)
            .map(|i| dirs.column(i).dot(&imgs.column(i)))
            .collect()
    };
    let eigen_tau = tau(&eigen_directions, &eigen_images);
    let cov_tau = tau(&cov_column_directions, &cov_images);
    if eigen_tau.iter().chain(&cov_tau).any(|t| !(*t > 0.0)) {
        return Err(Error::Eigen("direction with non-positive eᵀAe".into()));
    }

    Ok(DirectionSet {
        log_eigenvalues: eigenvalues.iter().map(|v| v.ln()).collect(),
        log_p_weights: p_weights.iter().map(|v| v.ln()).collect(),
        eigen_directions,
        eigenvalues,
        cov_column_directions,
        p_weights,
        eigen_images,
        cov_images,
        eigen_tau,
        cov_tau,
    })
}

fn normalize_columns(m: &mut DMatrix<f64>) -> Result<()> {
    for mut col in m.column_iter_mut() {
        let norm = col.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Eigen(format!(
                "cannot normalize direction of norm {norm}"
            )));
        }
        col /= norm;
    }
    Ok(())
}

/// Probabilities `∝ exp(−b · log_values[i])`, normalized in log space.
pub(crate) fn power_weights_into(log_values: &[f64], b: f64, out: &mut Vec<f64>) {
    out.clear();
    let mut max = f64::NEG_INFINITY;
    for &lv in log_values {
        let w = -b * lv;
        max = max.max(w);
        out.push(w);
    }
    let mut total = 0.0;
    for w in out.iter_mut() {
        *w = (*w - max).exp();
        total += *w;
    }
    for w in out.iter_mut() {
        *w /= total;
    }
}

/// `h₁(e_i) = λ_i^{-b} / Σ_j λ_j^{-b}`.
pub fn direction_weights_eigen(eigenvalues: &[f64], b: f64) -> Vec<f64> {
    let logs: Vec<f64> = eigenvalues.iter().map(|v| v.ln()).collect();
    let mut out = Vec::with_capacity(logs.len());
    power_weights_into(&logs, b, &mut out);
    out
}

/// `h₂(e_i^c) = P_i^{-b} / Σ_j P_j^{-b}`.
pub fn direction_weights_covcol(p_weights: &[f64], b: f64) -> Vec<f64> {
    direction_weights_eigen(p_weights, b)
}
