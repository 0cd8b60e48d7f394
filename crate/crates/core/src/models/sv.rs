//! Stochastic volatility models.
//!
//! Hidden AR(1) log-volatility x with stationary start, observations
//! y_i = sqrt(exp(θ₂ + exp(θ₃) x_i)) · w_i. `SvGaussian` takes w ~ N(0,1)
//! and supports particle filtering; `SvStable` takes w ~ Stab(θ₄, −1)
//! whose emission has no density, which is the whole point of treating
//! it with simulation-based inference.
//!
//! Both share the 7-component squared-series summary: exceedance count
//! over the observed 99% quantile, mean and standard deviation of y²,
//! and summed lag-1..5 autocorrelations of y² and of three quantile
//! indicator series.

use super::stats;
use super::{check_support, Hmm, Marginal, Model, Prior, RefCtx};
use crate::dist::{self, StableParams};
use crate::error::{Error, Result};
use crate::math;
use crate::rng::RngStream;
use alloc::vec::Vec;

static SVG_MARGINALS: [Marginal; 3] = [
    Marginal::Uniform { lo: 0.0, hi: 1.0 },
    Marginal::Normal { mean: 0.0, sd: 1.0 },
    Marginal::Normal { mean: 0.0, sd: 1.0 },
];
static SVG_PRIOR: Prior = Prior::Product(&SVG_MARGINALS);

static SVS_MARGINALS: [Marginal; 4] = [
    Marginal::Uniform { lo: 0.0, hi: 1.0 },
    Marginal::Normal { mean: 0.0, sd: 1.0 },
    Marginal::Normal { mean: 0.0, sd: 1.0 },
    Marginal::Uniform { lo: 1.5, hi: 2.0 },
];
static SVS_PRIOR: Prior = Prior::Product(&SVS_MARGINALS);

/// Simulate the shared SV skeleton; `emission_noise` draws one w_i.
fn simulate_sv(
    theta: &[f64],
    n: usize,
    rng: &mut RngStream,
    mut emission_noise: impl FnMut(&mut RngStream) -> f64,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParam("series length must be positive".into()));
    }
    let t1 = theta[0];
    let mut x = dist::standard_gaussian(rng) / math::sqrt(1.0 - t1 * t1);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 {
            x = t1 * x + dist::standard_gaussian(rng);
        }
        let scale = math::sqrt(math::exp(theta[1] + math::exp(theta[2]) * x));
        y.push(scale * emission_noise(rng));
    }
    Ok(y)
}

fn summarize_sv(y: &[f64], ctx: &RefCtx) -> Result<Vec<f64>> {
    stats::require_finite(y)?;
    let n = y.len();
    if n < 6 {
        return Err(Error::Data("SV summary needs lag-5 autocorrelations".into()));
    }
    let threshold = ctx.sq_q99.ok_or_else(|| {
        Error::Data("SV summary needs the observed-series context (sq_q99)".into())
    })?;
    let sq: Vec<f64> = y.iter().map(|v| v * v).collect();
    let mut s = Vec::with_capacity(7);
    s.push(sq.iter().filter(|&&v| v > threshold).count() as f64);
    let (mean, sd) = stats::mean_sd(&sq);
    s.push(mean);
    s.push(sd);
    s.push(stats::autocorr_sum(&sq, 5)?);
    for tau in [0.1, 0.5, 0.9] {
        let q = stats::quantile_type7(&sq, tau);
        let ind: Vec<f64> = sq.iter().map(|&v| if v < q { 1.0 } else { 0.0 }).collect();
        s.push(stats::autocorr_sum(&ind, 5)?);
    }
    Ok(s)
}

fn sv_ref_ctx(y0: &[f64]) -> RefCtx {
    let sq: Vec<f64> = y0.iter().map(|v| v * v).collect();
    RefCtx {
        sq_q99: Some(stats::quantile_type7(&sq, 0.99)),
    }
}

pub struct SvGaussian;

impl Model for SvGaussian {
    fn name(&self) -> &'static str {
        "svg"
    }

    fn param_dim(&self) -> usize {
        3
    }

    fn summary_dim(&self) -> usize {
        7
    }

    fn default_len(&self) -> usize {
        500
    }

    fn prior(&self) -> &Prior {
        &SVG_PRIOR
    }

    fn simulate(&self, theta: &[f64], n: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
        check_support(&SVG_PRIOR, theta)?;
        simulate_sv(theta, n, rng, dist::standard_gaussian)
    }

    fn summarize(&self, y: &[f64], ctx: &RefCtx) -> Result<Vec<f64>> {
        summarize_sv(y, ctx)
    }

    fn make_ref_ctx(&self, y0: &[f64]) -> RefCtx {
        sv_ref_ctx(y0)
    }

    fn hmm(&self) -> Option<&dyn Hmm> {
        Some(&SvgHmm)
    }
}

struct SvgHmm;

impl Hmm for SvgHmm {
    fn init_sample(&self, theta: &[f64], rng: &mut RngStream) -> f64 {
        dist::standard_gaussian(rng) / math::sqrt(1.0 - theta[0] * theta[0])
    }

    fn transition_sample(&self, x: f64, theta: &[f64], rng: &mut RngStream) -> f64 {
        theta[0] * x + dist::standard_gaussian(rng)
    }

    fn emission_logpdf(&self, y: f64, x: f64, theta: &[f64]) -> Result<f64> {
        let var = math::exp(theta[1] + math::exp(theta[2]) * x);
        Ok(-0.5 * (math::ln(2.0 * core::f64::consts::PI * var) + y * y / var))
    }
}

pub struct SvStable;

impl Model for SvStable {
    fn name(&self) -> &'static str {
        "svs"
    }

    fn param_dim(&self) -> usize {
        4
    }

    fn summary_dim(&self) -> usize {
        7
    }

    fn default_len(&self) -> usize {
        500
    }

    fn prior(&self) -> &Prior {
        &SVS_PRIOR
    }

    fn simulate(&self, theta: &[f64], n: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
        check_support(&SVS_PRIOR, theta)?;
        let stable = StableParams::new(theta[3], -1.0)?;
        simulate_sv(theta, n, rng, |r| dist::sample_stable(&stable, r))
    }

    fn summarize(&self, y: &[f64], ctx: &RefCtx) -> Result<Vec<f64>> {
        summarize_sv(y, ctx)
    }

    fn make_ref_ctx(&self, y0: &[f64]) -> RefCtx {
        sv_ref_ctx(y0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_variance_in_vanishing_volatility_limit() {
        // exp(θ₃) ≈ 0 kills the hidden-state influence: var(y) ≈ exp(θ₂)
        let th = [0.5, -2.0, -20.0];
        let mut rng = RngStream::new(55, 3);
        let y = SvGaussian.simulate(&th, 1_000_000, &mut rng).unwrap();
        let (mean, sd) = stats::mean_sd(&y);
        let var = sd * sd + mean * mean * 0.0;
        let want = math::exp(-2.0);
        assert!((var - want).abs() / want < 0.02, "var = {var}, want {want}");
    }

    #[test]
    fn sv_summary_on_iid_series_has_small_autocorr_sums() {
        let mut rng = RngStream::new(56, 3);
        let n = 4000usize;
        let y: Vec<f64> = (0..n).map(|_| dist::standard_gaussian(&mut rng)).collect();
        let ctx = SvGaussian.make_ref_ctx(&y);
        let s = SvGaussian.summarize(&y, &ctx).unwrap();
        let tol = 15.0 / (n as f64).sqrt();
        for c in [s[4], s[5], s[6]] {
            assert!(c.abs() < tol, "autocorr sum {c} exceeds {tol}");
        }
    }

    #[test]
    fn svs_rejects_unsupported_parameters() {
        let mut rng = RngStream::new(57, 3);
        assert!(SvStable.simulate(&[1.0, 0.0, 0.0, 1.8], 10, &mut rng).is_err());
        assert!(SvStable.simulate(&[0.5, 0.0, 0.0, 2.3], 10, &mut rng).is_err());
    }

    #[test]
    fn summary_requires_ref_context() {
        let mut rng = RngStream::new(58, 3);
        let y = SvGaussian.simulate(&[0.9, -2.0, -1.0], 50, &mut rng).unwrap();
        assert!(SvGaussian.summarize(&y, &RefCtx::default()).is_err());
        let ctx = SvGaussian.make_ref_ctx(&y);
        let s = SvGaussian.summarize(&y, &ctx).unwrap();
        assert_eq!(s.len(), 7);
        // the observed series exceeds its own 99% quantile in about 1% of points
        assert!(s[0] <= (0.05 * y.len() as f64).max(3.0));
    }

    #[test]
    fn svs_heavy_tails_beat_gaussian_kurtosis() {
        let mut rng_g = RngStream::new(59, 3);
        let mut rng_s = RngStream::new(59, 3);
        let n = 20_000;
        let yg = SvGaussian.simulate(&[0.5, 0.0, -1.0], n, &mut rng_g).unwrap();
        let ys = SvStable
            .simulate(&[0.5, 0.0, -1.0, 1.6], n, &mut rng_s)
            .unwrap();
        let kurt = |y: &[f64]| {
            let (m, sd) = stats::mean_sd(y);
            y.iter().map(|v| ((v - m) / sd).powi(4)).sum::<f64>() / y.len() as f64
        };
        assert!(kurt(&ys) > kurt(&yg));
    }
}
