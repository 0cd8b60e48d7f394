//! Moving-average model of order 2.
//!
//! y_i = z_i + θ₁ z_{i−1} + θ₂ z_{i−2} with z iid standard normal; the
//! prior is uniform over the identifiability region. The summary is the
//! sample variance plus autocovariances at lags 1 and 2. The likelihood
//! is multivariate Gaussian with a banded Toeplitz covariance, so an
//! exact chain is available as a reference.

use super::stats;
use super::{check_support, Model, Prior, RefCtx};
use crate::dist::standard_gaussian;
use crate::error::{Error, Result};
use crate::math;
use crate::rng::RngStream;
use alloc::vec;
use alloc::vec::Vec;

pub struct Ma2;

static PRIOR: Prior = Prior::Ma2Region;

impl Model for Ma2 {
    fn name(&self) -> &'static str {
        "ma2"
    }

    fn param_dim(&self) -> usize {
        2
    }

    fn summary_dim(&self) -> usize {
        3
    }

    fn default_len(&self) -> usize {
        200
    }

    fn prior(&self) -> &Prior {
        &PRIOR
    }

    fn simulate(&self, theta: &[f64], n: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
        check_support(&PRIOR, theta)?;
        if n == 0 {
            return Err(Error::InvalidParam("series length must be positive".into()));
        }
        let (t1, t2) = (theta[0], theta[1]);
        // innovations z_{-1}, z_0, ..., z_n
        let mut z_prev2 = standard_gaussian(rng);
        let mut z_prev1 = standard_gaussian(rng);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let z = standard_gaussian(rng);
            y.push(z + t1 * z_prev1 + t2 * z_prev2);
            z_prev2 = z_prev1;
            z_prev1 = z;
        }
        Ok(y)
    }

    fn summarize(&self, y: &[f64], _ctx: &RefCtx) -> Result<Vec<f64>> {
        stats::require_finite(y)?;
        if y.len() < 3 {
            return Err(Error::Data("MA(2) summary needs at least 3 points".into()));
        }
        Ok(vec![
            stats::autocov(y, 0),
            stats::autocov(y, 1),
            stats::autocov(y, 2),
        ])
    }

    fn exact_loglik(&self, theta: &[f64], y: &[f64]) -> Option<Result<f64>> {
        Some(ma2_exact_loglik(theta, y))
    }
}

/// Exact MA(2) log-likelihood: zero-mean MVN with banded covariance
/// (diagonal 1+θ₁²+θ₂², lag 1 θ₁+θ₁θ₂, lag 2 θ₂), evaluated through a
/// banded Cholesky in O(n).
pub fn ma2_exact_loglik(theta: &[f64], y: &[f64]) -> Result<f64> {
    check_support(&PRIOR, theta)?;
    stats::require_finite(y)?;
    let n = y.len();
    let (t1, t2) = (theta[0], theta[1]);
    let g0 = 1.0 + t1 * t1 + t2 * t2;
    let g1 = t1 + t1 * t2;
    let g2 = t2;

    // banded Cholesky with bandwidth 2: row i keeps (l2, l1, d) for
    // columns i-2, i-1, i
    let mut d = vec![0.0; n];
    let mut l1 = vec![0.0; n]; // L[i][i-1]
    let mut l2 = vec![0.0; n]; // L[i][i-2]
    for i in 0..n {
        if i >= 2 {
            l2[i] = g2 / d[i - 2];
        }
        if i >= 1 {
            let mut v = g1;
            if i >= 2 {
                v -= l2[i] * d[i - 2] * l1[i - 1];
            }
            l1[i] = v / d[i - 1];
        }
        let mut v = g0;
        if i >= 1 {
            v -= l1[i] * l1[i] * d[i - 1];
        }
        if i >= 2 {
            v -= l2[i] * l2[i] * d[i - 2];
        }
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::NotPositiveDefinite {
                dim: n,
                matrix: vec![g0, g1, g2],
            });
        }
        d[i] = v;
    }
    // solve L w = y (unit-diagonal L with the d's factored out: LDLᵀ)
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut acc = y[i];
        if i >= 1 {
            acc -= l1[i] * w[i - 1];
        }
        if i >= 2 {
            acc -= l2[i] * w[i - 2];
        }
        w[i] = acc;
    }
    let mut quad = 0.0;
    let mut log_det = 0.0;
    for i in 0..n {
        quad += w[i] * w[i] / d[i];
        log_det += math::ln(d[i]);
    }
    Ok(-0.5 * (n as f64 * math::ln(2.0 * core::f64::consts::PI) + log_det + quad))
}
