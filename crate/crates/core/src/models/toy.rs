//! One-dimensional Gaussian location model.
//!
//! y ~ N(θ, 1) with θ uniform on (−3, 3) and S(y) = ȳ. The tolerance
//! acceptance probability has the closed form
//! h(θ) = Φ((y₀+√ε−θ)√n) − Φ((y₀−√ε−θ)√n), which makes this the
//! validation target for every sampler and for the kNN estimators.

use super::stats;
use super::{check_support, Marginal, Model, Prior, RefCtx};
use crate::dist;
use crate::error::{Error, Result};
use crate::math;
use crate::rng::RngStream;
use alloc::vec;
use alloc::vec::Vec;

pub struct ToyLocation;

static MARGINALS: [Marginal; 1] = [Marginal::Uniform { lo: -3.0, hi: 3.0 }];
static PRIOR: Prior = Prior::Product(&MARGINALS);

impl Model for ToyLocation {
    fn name(&self) -> &'static str {
        "toy"
    }

    fn param_dim(&self) -> usize {
        1
    }

    fn summary_dim(&self) -> usize {
        1
    }

    fn default_len(&self) -> usize {
        1
    }

    fn prior(&self) -> &Prior {
        &PRIOR
    }

    fn simulate(&self, theta: &[f64], n: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
        check_support(&PRIOR, theta)?;
        if n == 0 {
            return Err(Error::InvalidParam("series length must be positive".into()));
        }
        Ok((0..n)
            .map(|_| theta[0] + dist::standard_gaussian(rng))
            .collect())
    }

    fn summarize(&self, y: &[f64], _ctx: &RefCtx) -> Result<Vec<f64>> {
        stats::require_finite(y)?;
        Ok(vec![y.iter().sum::<f64>() / y.len() as f64])
    }
}

/// Closed-form tolerance acceptance probability under the identity
/// discrepancy metric (δ = (ȳ − y₀)²): P(δ < ε | θ) for series length n.
pub fn toy_h(theta: f64, y0: f64, eps: f64, n: usize) -> f64 {
    let half_width = math::sqrt(eps);
    let scale = math::sqrt(n as f64);
    math::normal_cdf((y0 + half_width - theta) * scale)
        - math::normal_cdf((y0 - half_width - theta) * scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_oracle_agrees_with_monte_carlo() {
        let (y0, eps) = (0.5, 0.25);
        let mut rng = RngStream::new(200, 3);
        for &theta in &[-0.5, 0.3, 1.0] {
            let trials = 200_000;
            let mut hits = 0u64;
            for _ in 0..trials {
                let y = ToyLocation.simulate(&[theta], 1, &mut rng).unwrap();
                if (y[0] - y0) * (y[0] - y0) < eps {
                    hits += 1;
                }
            }
            let mc = hits as f64 / trials as f64;
            let exact = toy_h(theta, y0, eps, 1);
            assert!((mc - exact).abs() < 0.005, "theta {theta}: mc {mc} vs {exact}");
        }
    }
}
