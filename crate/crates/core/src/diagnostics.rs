//! Autocorrelation, integrated autocorrelation time and effective sample size.
//!
//! The autocovariance is computed by FFT; the integrated time uses Geyer's
//! initial monotone sequence estimator.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::stats;

/// Normalized autocorrelation `ρ_0 … ρ_{n−1}`. Empty for a constant series.
pub fn autocorrelation(series: &[f64]) -> Vec<f64> {
    let n = series.len();
    if n < 2 {
        return Vec::new();
    }
    let m = stats::mean(series);
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = series
        .iter()
        .map(|v| Complex::new(v - m, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let c0 = buf[0].re;
    if !(c0 > 0.0) {
        return Vec::new();
    }
    buf[..n].iter().map(|c| c.re / c0).collect()
}

/// `τ = 1 + 2 Σ ρ_t`, truncated by the initial monotone positive sequence.
/// NaN when fewer than four values or the series is constant.
pub fn integrated_autocorrelation_time(series: &[f64]) -> f64 {
    if series.len() < 4 {
        return f64::NAN;
    }
    let rho = autocorrelation(series);
    if rho.is_empty() {
        return f64::NAN;
    }
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut k = 0;
    while 2 * k + 1 < rho.len() {
        let mut pair = rho[2 * k] + rho[2 * k + 1];
        if pair <= 0.0 {
            break;
        }
        if pair > prev {
            pair = prev;
        }
        sum += pair;
        prev = pair;
        k += 1;
    }
    (2.0 * sum - 1.0).max(1.0 / series.len() as f64)
}

pub fn effective_sample_size(series: &[f64]) -> f64 {
    series.len() as f64 / integrated_autocorrelation_time(series)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateDiagnostics {
    pub ess: f64,
    pub iat: f64,
}

impl CoordinateDiagnostics {
    pub fn of(series: &[f64]) -> Self {
        let iat = integrated_autocorrelation_time(series);
        Self {
            ess: series.len() as f64 / iat,
            iat,
        }
    }
}
