//! Ricker population model with Poisson observations.
//!
//! x_{-49} = 1, x_i = exp(exp(θ₁)) x_{i-1} exp(-x_{i-1} + z_i) with
//! z_i ~ N(0, exp(θ₂)²), observed through y_i ~ Pois(exp(θ₃) x_i); the
//! first 50 observations are discarded. The 14 summary components follow
//! the classic synthetic-likelihood feature set: zero count, mean,
//! autocorrelations at lags 1–5, cubic regression of first differences
//! on the level, and quadratic regression on the 0.3-power scale.

use super::stats;
use super::{check_support, Hmm, Marginal, Model, Prior, RefCtx};
use crate::dist;
use crate::error::{Error, Result};
use crate::linalg;
use crate::math;
use crate::rng::RngStream;
use alloc::vec::Vec;

pub struct Ricker;

const BURN: usize = 50;

static MARGINALS: [Marginal; 3] = [
    Marginal::Normal { mean: 0.0, sd: 1.0 },
    Marginal::Uniform { lo: -2.3, hi: 0.0 },
    Marginal::Normal { mean: 0.0, sd: 2.0 },
];
static PRIOR: Prior = Prior::Product(&MARGINALS);

#[inline]
fn step(x: f64, growth: f64, noise_sd: f64, rng: &mut RngStream) -> f64 {
    let z = noise_sd * dist::standard_gaussian(rng);
    growth * x * math::exp(-x + z)
}

impl Model for Ricker {
    fn name(&self) -> &'static str {
        "ricker"
    }

    fn param_dim(&self) -> usize {
        3
    }

    fn summary_dim(&self) -> usize {
        14
    }

    fn default_len(&self) -> usize {
        100
    }

    fn prior(&self) -> &Prior {
        &PRIOR
    }

    fn simulate(&self, theta: &[f64], n: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
        check_support(&PRIOR, theta)?;
        if n == 0 {
            return Err(Error::InvalidParam("series length must be positive".into()));
        }
        let growth = math::exp(math::exp(theta[0]));
        let noise_sd = math::exp(theta[1]);
        let obs_rate = math::exp(theta[2]);
        let mut x = 1.0;
        for _ in 0..BURN {
            x = step(x, growth, noise_sd, rng);
        }
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            y.push(dist::poisson(obs_rate * x, rng)? as f64);
            x = step(x, growth, noise_sd, rng);
        }
        Ok(y)
    }

    fn summarize(&self, y: &[f64], _ctx: &RefCtx) -> Result<Vec<f64>> {
        stats::require_finite(y)?;
        let n = y.len();
        if n < 6 {
            return Err(Error::Data(
                "Ricker summary needs lag-5 autocorrelations".into(),
            ));
        }
        let mut s = Vec::with_capacity(14);
        s.push(count_zeros(y));
        s.push(y.iter().sum::<f64>() / n as f64);
        for lag in 1..=5 {
            s.push(stats::autocorr(y, lag)?.0);
        }
        // (y_i − y_{i−1}) on (1, y_i, y_i², y_i³), i = 2..n
        let rows = n - 1;
        let mut design = Vec::with_capacity(rows * 4);
        let mut resp = Vec::with_capacity(rows);
        for i in 1..n {
            let v = y[i];
            design.extend_from_slice(&[1.0, v, v * v, v * v * v]);
            resp.push(y[i] - y[i - 1]);
        }
        let cubic = linalg::ols_fit(&design, rows, 4, &resp)?;
        s.extend_from_slice(&cubic.coeffs);
        // y_i^0.3 on (1, y_{i−1}^0.3, y_{i−1}^0.6), i = 2..n
        let mut design = Vec::with_capacity(rows * 3);
        let mut resp = Vec::with_capacity(rows);
        for i in 1..n {
            let prev = math::powf(y[i - 1], 0.3);
            design.extend_from_slice(&[1.0, prev, prev * prev]);
            resp.push(math::powf(y[i], 0.3));
        }
        let quad = linalg::ols_fit(&design, rows, 3, &resp)?;
        s.extend_from_slice(&quad.coeffs);
        Ok(s)
    }

    fn hmm(&self) -> Option<&dyn Hmm> {
        Some(&RickerHmm)
    }
}

pub(crate) fn count_zeros(y: &[f64]) -> f64 {
    y.iter().filter(|&&v| v == 0.0).count() as f64
}

struct RickerHmm;

impl Hmm for RickerHmm {
    fn init_sample(&self, theta: &[f64], rng: &mut RngStream) -> f64 {
        let growth = math::exp(math::exp(theta[0]));
        let noise_sd = math::exp(theta[1]);
        let mut x = 1.0;
        for _ in 0..BURN {
            x = step(x, growth, noise_sd, rng);
        }
        x
    }

    fn transition_sample(&self, x: f64, theta: &[f64], rng: &mut RngStream) -> f64 {
        step(x, math::exp(math::exp(theta[0])), math::exp(theta[1]), rng)
    }

    fn emission_logpdf(&self, y: f64, x: f64, theta: &[f64]) -> Result<f64> {
        if x < 0.0 {
            return Err(Error::InvalidParam(
                "Ricker emission needs a nonnegative state".into(),
            ));
        }
        let lambda = math::exp(theta[2]) * x;
        let k = y;
        if lambda == 0.0 {
            // degenerate Poisson: unit mass at zero
            return Ok(if k == 0.0 { 0.0 } else { f64::NEG_INFINITY });
        }
        Ok(-lambda + k * math::ln(lambda) - math::ln_gamma(k + 1.0))
    }
}
