//! Systematic-scan coordinate Gibbs sampler, used as an efficiency baseline.

use nalgebra::DVector;
use rand::SeedableRng;

use super::{
    check_box, default_start, sample_truncated_normal_1d, ChainResult, ChainRng, Draws,
    SamplerConfig,
};
use crate::error::{Error, Result};
use crate::posterior::MtnDistribution;

/// Each retained draw is `thin` full sweeps apart; `burn_in` counts sweeps.
/// `mixing_probability` and `beta_shape` are ignored.
pub fn run_coordinate_gibbs(
    target: &MtnDistribution,
    config: &SamplerConfig,
) -> Result<ChainResult> {
    config.validate()?;
    check_box(target)?;
    let n = target.dim();
    let a = target.precision();
    let lower = target.lower().as_slice();
    let upper = target.upper().as_slice();
    let mut rng = ChainRng::seed_from_u64(config.seed);
    let mut x = default_start(target);
    if !target.contains_strictly(x.as_slice()) {
        return Err(Error::OutsideBox(
            "starting point not strictly inside the box".into(),
        ));
    }
    let mut g: DVector<f64> = a * (&x - target.mean());
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();

    let mut sweep = |x: &mut DVector<f64>, g: &mut DVector<f64>| {
        for i in 0..n {
            let tau = diag[i];
            let mu_r = -g[i] / tau;
            let r =
                sample_truncated_normal_1d(mu_r, tau, lower[i] - x[i], upper[i] - x[i], &mut rng);
            let v = x[i] + r;
            if lower[i] < v && v < upper[i] {
                x[i] = v;
                g.axpy(r, &a.column(i), 1.0);
            }
        }
    };

    for _ in 0..config.burn_in {
        sweep(&mut x, &mut g);
    }
    let mut draws = Draws::with_capacity(n, config.sample_count);
    let mut sweeps = config.burn_in as u64;
    for t in 0..config.sample_count {
        for _ in 0..config.thin {
            sweep(&mut x, &mut g);
        }
        sweeps += config.thin as u64;
        if t % 64 == 63 {
            g = a * (&x - target.mean());
        }
        draws.push(x.as_slice());
    }
    Ok(ChainResult::finish(
        draws,
        0,
        0,
        sweeps * n as u64,
        config.seed,
    ))
}
