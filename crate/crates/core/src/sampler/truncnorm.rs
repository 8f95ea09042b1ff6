//! Exact draws from a univariate normal truncated to an interval.
//!
//! Inverse-CDF in the bulk (standardized mass above `1e-10`), computed on the
//! side of zero where the CDF is accurate; rejection from a uniform or
//! exponential envelope in deep tails.

use rand::Rng;
use statrs::function::erf::{erfc, erfc_inv};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Standardized mass below which rejection sampling is used.
pub const INVERSE_CDF_MIN_MASS: f64 = 1e-10;

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

fn std_normal_quantile(p: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * p)
}

/// Draw from `N(mu, 1/tau)` truncated to `(c, d)`; the result lies strictly inside.
pub fn sample_truncated_normal_1d<R: Rng + ?Sized>(
    mu: f64,
    tau: f64,
    c: f64,
    d: f64,
    rng: &mut R,
) -> f64 {
    debug_assert!(
        tau > 0.0 && c < d,
        "invalid truncated normal ({mu}, {tau}, {c}, {d})"
    );
    let sd = 1.0 / tau.sqrt();
    let alpha = (c - mu) / sd;
    let beta = (d - mu) / sd;
    for _ in 0..64 {
        let r = mu + sd * standard_truncated(alpha, beta, rng);
        if c < r && r < d {
            return r;
        }
    }
    // Only reachable when (c, d) is narrower than the rounding of mu + sd z.
    let mid = 0.5 * c + 0.5 * d;
    if c < mid && mid < d {
        mid
    } else {
        c.max(d.min(mu))
    }
}

/// Standard normal truncated to `(alpha, beta)`.
pub fn standard_truncated<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> f64 {
    if alpha >= 0.0 {
        -lower_side(-beta, -alpha, rng)
    } else {
        lower_side(alpha, beta, rng)
    }
}

/// Interval with `alpha < 0`; either straddles zero or lies below it.
fn lower_side<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> f64 {
    let pl = std_normal_cdf(alpha);
    let pu = std_normal_cdf(beta);
    let mass = pu - pl;
    if mass > INVERSE_CDF_MIN_MASS {
        loop {
            let u: f64 = rng.random();
            let z = std_normal_quantile(pl + u * mass);
            if alpha < z && z < beta {
                return z;
            }
        }
    }
    if beta <= 0.0 {
        -tail_rejection(-beta, -alpha, rng)
    } else {
        // narrow interval around zero
        loop {
            let z = uniform_open(alpha, beta, rng);
            let peak = if alpha > 0.0 {
                alpha
            } else if beta < 0.0 {
                beta
            } else {
                0.0
            };
            let u: f64 = rng.random();
            if u < (-(z * z - peak * peak) / 2.0).exp() {
                return z;
            }
        }
    }
}

/// Standard normal on `(a, b)` with `0 ≤ a < b`, by rejection.
fn tail_rejection<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if b - a < 1.0 / a.max(f64::MIN_POSITIVE) {
        loop {
            let z = uniform_open(a, b, rng);
            let u: f64 = rng.random();
            if u < (-(z * z - a * a) / 2.0).exp() {
                return z;
            }
        }
    }
    let rate = (a + (a * a + 4.0).sqrt()) / 2.0;
    loop {
        let u: f64 = rng.random();
        let z = a - (1.0 - u).ln() / rate;
        if !(z > a && z < b) {
            continue;
        }
        let v: f64 = rng.random();
        if v < (-(z - rate).powi(2) / 2.0).exp() {
            return z;
        }
    }
}

fn uniform_open<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        let z = a + u * (b - a);
        if a < z && z < b {
            return z;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn draws(mu: f64, tau: f64, c: f64, d: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| sample_truncated_normal_1d(mu, tau, c, d, &mut rng))
            .collect()
    }

    #[test]
    fn untruncated_mean() {
        let (mu, tau) = (1.5, 4.0);
        let v = draws(mu, tau, f64::NEG_INFINITY, f64::INFINITY, 1_000_000, 1);
        let m = crate::stats::mean(&v);
        let sd = 1.0 / tau.sqrt();
        assert!((m - mu).abs() < 4.0 * sd / 1e3, "{m}");
        let var = crate::stats::variance(&v);
        assert!((var - 0.25).abs() < 0.005, "{var}");
    }

    #[test]
    fn half_normal_mean() {
        let v = draws(0.0, 1.0, 0.0, f64::INFINITY, 400_000, 2);
        let expected = 0.797_884_560_802_865_4; // sqrt(2/pi)
        let se = ((1.0 - 2.0 / std::f64::consts::PI) / v.len() as f64).sqrt();
        let m = crate::stats::mean(&v);
        assert!((m - expected).abs() < 3.0 * se, "{m}");
        assert!(v.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn deep_tail_stays_inside() {
        for (c, d) in [
            (10.0, 11.0),
            (-11.0, -10.0),
            (30.0, f64::INFINITY),
            (40.0, 40.000001),
        ] {
            let v = draws(0.0, 1.0, c, d, 10_000, 3);
            assert!(
                v.iter().all(|&x| x.is_finite() && c < x && x < d),
                "({c}, {d})"
            );
        }
        // inverse Mills ratio at 20
        let v = draws(0.0, 1.0, 20.0, f64::INFINITY, 100_000, 4);
        let m = crate::stats::mean(&v);
        assert!((m - 20.049_753_07).abs() < 0.002, "{m}");
    }

    #[test]
    fn narrow_intervals() {
        let v = draws(0.0, 1.0, -1e-12, 1e-12, 1000, 5);
        assert!(v.iter().all(|&x| -1e-12 < x && x < 1e-12));
        let v = draws(3.0, 1e6, 0.0, 1e-9, 1000, 6);
        assert!(v.iter().all(|&x| 0.0 < x && x < 1e-9));
    }

    #[test]
    fn two_sided_moments() {
        // N(0,1) on (-1, 2): mean = (φ(-1) − φ(2)) / (Φ(2) − Φ(-1))
        let phi = |x: f64| (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mass = std_normal_cdf(2.0) - std_normal_cdf(-1.0);
        let expected = (phi(-1.0) - phi(2.0)) / mass;
        let v = draws(0.0, 1.0, -1.0, 2.0, 400_000, 7);
        let se = (crate::stats::variance(&v) / v.len() as f64).sqrt();
        assert!((crate::stats::mean(&v) - expected).abs() < 3.0 * se);
    }
}
