//! Deviance, DIC from chain output, and the grid search over correlation lengths.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::FaultMesh;
use crate::greens::GreensMatrix;
use crate::posterior::{build_posterior, log_likelihood, LikelihoodSpec};
use crate::prior::{MaternParams, Prior, PriorSpec};
use crate::sampler::{run_chain, ChainResult, Draws, SamplerConfig};

/// `−2 log L(D)`.
pub fn deviance(
    slip: &DVector<f64>,
    y: &DVector<f64>,
    x: &GreensMatrix,
    likelihood: &LikelihoodSpec,
) -> Result<f64> {
    Ok(-2.0 * log_likelihood(slip, y, x, likelihood)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DicSummary {
    pub dic: f64,
    pub p_d: f64,
    pub mean_deviance: f64,
    pub deviance_at_mean: f64,
}

/// `D̄ = mean deviance`, `p_D = D̄ − D(θ̄)` with `θ̄` the mean draw, `DIC = D̄ + p_D`.
pub fn dic_from_draws(
    draws: &Draws,
    y: &DVector<f64>,
    x: &GreensMatrix,
    likelihood: &LikelihoodSpec,
) -> Result<DicSummary> {
    let theta_bar = draws.mean().ok_or(Error::EmptyChain)?;
    let mut total = 0.0;
    for t in 0..draws.len() {
        total += deviance(&draws.row_vector(t), y, x, likelihood)?;
    }
    let mean_deviance = total / draws.len() as f64;
    let deviance_at_mean = deviance(&theta_bar, y, x, likelihood)?;
    let p_d = mean_deviance - deviance_at_mean;
    Ok(DicSummary {
        dic: mean_deviance + p_d,
        p_d,
        mean_deviance,
        deviance_at_mean,
    })
}

pub fn dic_from_chain(
    chain: &ChainResult,
    y: &DVector<f64>,
    x: &GreensMatrix,
    likelihood: &LikelihoodSpec,
) -> Result<DicSummary> {
    dic_from_draws(&chain.draws, y, x, likelihood)
}

/// Data and fixed model pieces shared by every grid cell.
#[derive(Debug, Clone, Copy)]
pub struct InversionInputs<'a> {
    pub mesh: &'a FaultMesh,
    pub y: &'a DVector<f64>,
    pub x: &'a GreensMatrix,
    pub likelihood: &'a LikelihoodSpec,
    pub prior: &'a PriorSpec,
    pub gamma_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DicCell {
    pub lambda_s: f64,
    pub lambda_d: f64,
    pub seed: u64,
    /// `Err` holds the message of the failure that invalidated the cell.
    pub outcome: std::result::Result<DicSummary, String>,
}

impl DicCell {
    pub fn dic(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(|s| s.dic)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DicTable {
    /// Valid cells by increasing DIC, then invalid cells in grid order.
    pub cells: Vec<DicCell>,
}

impl DicTable {
    pub fn best(&self) -> Option<&DicCell> {
        self.cells.first().filter(|c| c.outcome.is_ok())
    }
}

/// Cross product of strike and dip correlation lengths, strike-major.
pub fn lambda_grid(lambda_s: &[f64], lambda_d: &[f64]) -> Vec<(f64, f64)> {
    lambda_s
        .iter()
        .flat_map(|&s| lambda_d.iter().map(move |&d| (s, d)))
        .collect()
}

/// One chain and DIC for a single `(λ_s, λ_d)`.
pub fn dic_for_lengths(
    inputs: &InversionInputs<'_>,
    lambda_s: f64,
    lambda_d: f64,
    config: &SamplerConfig,
) -> Result<DicSummary> {
    let params = MaternParams {
        lambda_s,
        lambda_d,
        gamma_sq: inputs.gamma_sq,
    };
    params.validate()?;
    let prior = Prior::build(inputs.mesh, &params, inputs.prior)?;
    let post = build_posterior(
        inputs.y,
        inputs.x,
        inputs.likelihood,
        &prior.a0,
        inputs.prior,
    )?;
    let chain = run_chain(&post, config)?;
    dic_from_chain(&chain, inputs.y, inputs.x, inputs.likelihood)
}

/// Evaluate DIC over `grid`. Cells run concurrently; each uses `seeds[k]`
/// when given, otherwise the shared `config.seed`.
pub fn dic_grid_search(
    inputs: &InversionInputs<'_>,
    grid: &[(f64, f64)],
    config: &SamplerConfig,
    seeds: Option<&[u64]>,
) -> Result<DicTable> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter(
            "empty correlation-length grid".into(),
        ));
    }
    if let Some(s) = seeds {
        if s.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} seeds for {} grid cells",
                s.len(),
                grid.len()
            )));
        }
    }
    config.validate()?;
    let mut cells: Vec<DicCell> = grid
        .par_iter()
        .enumerate()
        .map(|(k, &(lambda_s, lambda_d))| {
            let seed = seeds.map_or(config.seed, |s| s[k]);
            let cfg = SamplerConfig { seed, ..*config };
            DicCell {
                lambda_s,
                lambda_d,
                seed,
                outcome: dic_for_lengths(inputs, lambda_s, lambda_d, &cfg)
                    .map_err(|e| e.to_string()),
            }
        })
        .collect();
    // stable sort keeps invalid cells in grid order
    cells.sort_by(|a, b| match (a.dic(), b.dic()) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    Ok(DicTable { cells })
}
