//! Benchmark generative models.
//!
//! Each model bundles a simulator, a prior and a summary statistic; the
//! MA(2) model additionally exposes its exact likelihood, and the Ricker
//! and Gaussian stochastic-volatility models expose transition/emission
//! densities for particle filtering.

mod ma2;
mod ricker;
pub(crate) mod stats;
mod sv;
mod toy;

pub use ma2::{ma2_exact_loglik, Ma2};
pub use ricker::Ricker;
pub use stats::{autocorr, quantile_type7};
pub use sv::{SvGaussian, SvStable};
pub use toy::{toy_h, ToyLocation};

use crate::dist;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Reference-series context threaded into `summarize`. The stochastic
/// volatility statistics count exceedances of the 99% quantile of the
/// *observed* squared series, which therefore has to travel with the
/// summary call.
#[derive(Debug, Clone, Default)]
pub struct RefCtx {
    pub sq_q99: Option<f64>,
}

pub trait Model: Sync {
    fn name(&self) -> &'static str;
    /// Dimension q of the parameter space.
    fn param_dim(&self) -> usize;
    /// Dimension p of the summary statistic.
    fn summary_dim(&self) -> usize;
    /// Series length used by the benchmark studies.
    fn default_len(&self) -> usize;
    fn prior(&self) -> &Prior;
    fn simulate(&self, theta: &[f64], n: usize, rng: &mut RngStream) -> Result<Vec<f64>>;
    fn summarize(&self, y: &[f64], ctx: &RefCtx) -> Result<Vec<f64>>;
    /// Context extracted from the observed series, fed back into every
    /// later `summarize` call for this dataset.
    fn make_ref_ctx(&self, _y0: &[f64]) -> RefCtx {
        RefCtx::default()
    }
    fn exact_loglik(&self, _theta: &[f64], _y: &[f64]) -> Option<Result<f64>> {
        None
    }
    fn hmm(&self) -> Option<&dyn Hmm> {
        None
    }
}

/// Transition/emission access for particle filtering. Hidden states are
/// scalar for every model here.
pub trait Hmm: Sync {
    fn init_sample(&self, theta: &[f64], rng: &mut RngStream) -> f64;
    fn transition_sample(&self, x: f64, theta: &[f64], rng: &mut RngStream) -> f64;
    fn emission_logpdf(&self, y: f64, x: f64, theta: &[f64]) -> Result<f64>;
}

/// One-dimensional prior component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Marginal {
    Normal { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl Marginal {
    fn sample(&self, rng: &mut RngStream) -> f64 {
        match *self {
            Marginal::Normal { mean, sd } => mean + sd * dist::standard_gaussian(rng),
            Marginal::Uniform { lo, hi } => lo + (hi - lo) * rng.next_f64(),
        }
    }

    fn logpdf(&self, x: f64) -> f64 {
        match *self {
            Marginal::Normal { mean, sd } => crate::math::normal_logpdf(x, mean, sd),
            Marginal::Uniform { lo, hi } => {
                if x > lo && x < hi {
                    -crate::math::ln(hi - lo)
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    fn in_support(&self, x: f64) -> bool {
        match *self {
            Marginal::Normal { .. } => x.is_finite(),
            Marginal::Uniform { lo, hi } => x > lo && x < hi,
        }
    }

    fn mean(&self) -> f64 {
        match *self {
            Marginal::Normal { mean, .. } => mean,
            Marginal::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    fn var(&self) -> f64 {
        match *self {
            Marginal::Normal { sd, .. } => sd * sd,
            Marginal::Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
        }
    }
}

/// Model prior: either a product of independent marginals or the MA(2)
/// identifiability region {θ₁+θ₂ > −1, θ₁−θ₂ < 1, −2 < θ₁ < 2, −1 < θ₂ < 2}
/// carrying the uniform law.
#[derive(Debug, Clone, PartialEq)]
pub enum Prior {
    Product(&'static [Marginal]),
    Ma2Region,
}

/// Area of the MA(2) region: the (−2,2)×(−1,2) box minus two corner
/// triangles, ∫(3−|θ₁|)dθ₁ = 8.
const MA2_AREA: f64 = 8.0;

impl Prior {
    pub fn dim(&self) -> usize {
        match self {
            Prior::Product(m) => m.len(),
            Prior::Ma2Region => 2,
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> Vec<f64> {
        match self {
            Prior::Product(ms) => ms.iter().map(|m| m.sample(rng)).collect(),
            Prior::Ma2Region => loop {
                let t1 = -2.0 + 4.0 * rng.next_f64();
                let t2 = -1.0 + 3.0 * rng.next_f64();
                let th = [t1, t2];
                if self.in_support(&th) {
                    return vec![t1, t2];
                }
            },
        }
    }

    pub fn logpdf(&self, theta: &[f64]) -> f64 {
        match self {
            Prior::Product(ms) => {
                if theta.len() != ms.len() {
                    return f64::NEG_INFINITY;
                }
                ms.iter().zip(theta).map(|(m, &x)| m.logpdf(x)).sum()
            }
            Prior::Ma2Region => {
                if self.in_support(theta) {
                    -crate::math::ln(MA2_AREA)
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn in_support(&self, theta: &[f64]) -> bool {
        match self {
            Prior::Product(ms) => {
                theta.len() == ms.len()
                    && ms.iter().zip(theta).all(|(m, &x)| m.in_support(x))
            }
            Prior::Ma2Region => {
                theta.len() == 2 && {
                    let (t1, t2) = (theta[0], theta[1]);
                    t1 + t2 > -1.0
                        && t1 - t2 < 1.0
                        && (-2.0..2.0).contains(&t1)
                        && t1 > -2.0
                        && (-1.0..2.0).contains(&t2)
                        && t2 > -1.0
                }
            }
        }
    }

    /// Exact prior mean (the burn-in adaptation starts from it).
    pub fn mean(&self) -> Vec<f64> {
        match self {
            Prior::Product(ms) => ms.iter().map(|m| m.mean()).collect(),
            // E[θ₁] = 0 by symmetry; E[θ₂] = 11/12 over the region.
            Prior::Ma2Region => vec![0.0, 11.0 / 12.0],
        }
    }

    /// Exact prior covariance, row-major q×q.
    pub fn cov(&self) -> Vec<f64> {
        match self {
            Prior::Product(ms) => {
                let q = ms.len();
                let mut cov = vec![0.0; q * q];
                for (i, m) in ms.iter().enumerate() {
                    cov[i * q + i] = m.var();
                }
                cov
            }
            // Var θ₁ = 1, Var θ₂ = 4/3 − (11/12)² = 71/144, Cov = 0.
            Prior::Ma2Region => vec![1.0, 0.0, 0.0, 71.0 / 144.0],
        }
    }
}

pub(crate) fn check_support(prior: &Prior, theta: &[f64]) -> Result<()> {
    if prior.in_support(theta) {
        Ok(())
    } else {
        Err(Error::InvalidParam(format!(
            "parameter outside prior support: {theta:?}"
        )))
    }
}

pub static MA2: Ma2 = Ma2;
pub static RICKER: Ricker = Ricker;
pub static SV_GAUSSIAN: SvGaussian = SvGaussian;
pub static SV_STABLE: SvStable = SvStable;
pub static TOY: ToyLocation = ToyLocation;

/// Model registry for name-based lookup.
pub fn by_name(name: &str) -> Option<&'static dyn Model> {
    match name {
        "ma2" => Some(&MA2),
        "ricker" => Some(&RICKER),
        "svg" => Some(&SV_GAUSSIAN),
        "svs" => Some(&SV_STABLE),
        "toy" => Some(&TOY),
        _ => None,
    }
}

pub fn all_models() -> [&'static dyn Model; 5] {
    [&MA2, &RICKER, &SV_GAUSSIAN, &SV_STABLE, &TOY]
}

/// Benchmark true parameters used by the replication studies.
pub fn benchmark_truth(name: &str) -> Option<Vec<f64>> {
    match name {
        "ma2" => Some(vec![0.6, 0.6]),
        // σ_e = 0.3 puts θ₂ = ln 0.3 inside the Unif(−2.3, 0) prior.
        "ricker" => Some(vec![crate::math::ln(3.8), crate::math::ln(0.3), 2.3]),
        "svg" => Some(vec![0.95, -2.0, -1.0]),
        "svs" => Some(vec![0.95, -2.0, -1.0, 1.8]),
        "toy" => Some(vec![0.5]),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ma2_region_membership() {
        let p = Prior::Ma2Region;
        assert!(p.in_support(&[0.6, 0.6]));
        assert!(!p.in_support(&[1.9, 0.5])); // θ₁−θ₂ = 1.4 ≥ 1
        assert!(!p.in_support(&[-0.8, -0.5])); // θ₁+θ₂ = −1.3 ≤ −1
        assert!(!p.in_support(&[2.1, 1.0]));
    }

    #[test]
    fn ma2_region_area_against_grid_oracle() {
        // Monte Carlo acceptance rate over the bounding box vs a fine
        // deterministic grid integration of the same indicator.
        let p = Prior::Ma2Region;
        let g = 2000;
        let mut hits = 0u64;
        for i in 0..g {
            for j in 0..g {
                let t1 = -2.0 + 4.0 * (i as f64 + 0.5) / g as f64;
                let t2 = -1.0 + 3.0 * (j as f64 + 0.5) / g as f64;
                if p.in_support(&[t1, t2]) {
                    hits += 1;
                }
            }
        }
        let grid_area = 12.0 * hits as f64 / (g * g) as f64;
        assert!((grid_area - MA2_AREA).abs() < 0.01, "grid area {grid_area}");

        let mut rng = RngStream::new(5, 0);
        let n = 200_000;
        let mut acc = 0u64;
        for _ in 0..n {
            let t1 = -2.0 + 4.0 * rng.next_f64();
            let t2 = -1.0 + 3.0 * rng.next_f64();
            if p.in_support(&[t1, t2]) {
                acc += 1;
            }
        }
        let mc_area = 12.0 * acc as f64 / n as f64;
        assert!((mc_area - grid_area).abs() < 0.05, "mc {mc_area} vs grid {grid_area}");
    }

    #[test]
    fn ma2_prior_moments_match_monte_carlo() {
        let p = Prior::Ma2Region;
        let mut rng = RngStream::new(6, 0);
        let n = 400_000;
        let mut sum = [0.0f64; 2];
        let mut sumsq = [0.0f64; 2];
        let mut cross = 0.0f64;
        for _ in 0..n {
            let th = p.sample(&mut rng);
            sum[0] += th[0];
            sum[1] += th[1];
            sumsq[0] += th[0] * th[0];
            sumsq[1] += th[1] * th[1];
            cross += th[0] * th[1];
        }
        let mean = [sum[0] / n as f64, sum[1] / n as f64];
        let want = p.mean();
        assert!((mean[0] - want[0]).abs() < 0.01);
        assert!((mean[1] - want[1]).abs() < 0.01);
        let cov = p.cov();
        assert!((sumsq[0] / n as f64 - mean[0] * mean[0] - cov[0]).abs() < 0.02);
        assert!((sumsq[1] / n as f64 - mean[1] * mean[1] - cov[3]).abs() < 0.02);
        assert!((cross / n as f64 - mean[0] * mean[1]).abs() < 0.02);
    }

    #[test]
    fn product_prior_sampling_respects_support() {
        let mut rng = RngStream::new(7, 0);
        let prior = RICKER.prior();
        for _ in 0..1000 {
            let th = prior.sample(&mut rng);
            assert!(prior.in_support(&th));
            assert!(th[1] > -2.3 && th[1] < 0.0);
            assert!(prior.logpdf(&th).is_finite());
        }
        assert_eq!(prior.logpdf(&[0.0, 0.5, 0.0]), f64::NEG_INFINITY);
    }

    #[test]
    fn simulate_never_errors_on_prior_draws() {
        for model in all_models() {
            let mut prior_rng = RngStream::new(1234, 0);
            let mut sim_rng = RngStream::new(1234, 1);
            for _ in 0..1000 {
                let th = model.prior().sample(&mut prior_rng);
                let n = model.default_len().min(64);
                let y = model.simulate(&th, n, &mut sim_rng).unwrap();
                assert_eq!(y.len(), n);
                assert!(y.iter().all(|v| v.is_finite()), "{} produced non-finite data", model.name());
            }
        }
    }

    #[test]
    fn registry_knows_all_models() {
        for m in all_models() {
            assert_eq!(by_name(m.name()).unwrap().name(), m.name());
            assert_eq!(benchmark_truth(m.name()).unwrap().len(), m.param_dim());
        }
        assert!(by_name("nonsense").is_none());
    }
}
