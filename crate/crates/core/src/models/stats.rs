//! Shared summary-statistic helpers.

use crate::error::{Error, Result};
use crate::math;
use alloc::format;

/// Sample autocorrelation with the biased (divisor n) denominator:
/// ρ̂_a = Σ(yᵢ−ȳ)(yᵢ₊ₐ−ȳ) / Σ(yᵢ−ȳ)².
///
/// A zero-variance series yields 0 with the degeneracy flag set.
pub fn autocorr(y: &[f64], lag: usize) -> Result<(f64, bool)> {
    let n = y.len();
    if lag >= n {
        return Err(Error::InvalidParam(format!(
            "autocorrelation lag {lag} needs a series longer than {lag}"
        )));
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let denom: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if denom == 0.0 {
        return Ok((0.0, true));
    }
    let mut num = 0.0;
    for i in 0..n - lag {
        num += (y[i] - mean) * (y[i + lag] - mean);
    }
    Ok((num / denom, false))
}

/// Sum of the autocorrelations at lags 1..=k (degenerate lags count 0).
pub fn autocorr_sum(y: &[f64], k: usize) -> Result<f64> {
    let mut acc = 0.0;
    for lag in 1..=k {
        acc += autocorr(y, lag)?.0;
    }
    Ok(acc)
}

/// Quantile by linear interpolation of order statistics (type 7).
pub fn quantile_type7(values: &[f64], tau: f64) -> f64 {
    debug_assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    quantile_sorted(&sorted, tau)
}

pub fn quantile_sorted(sorted: &[f64], tau: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = tau.clamp(0.0, 1.0) * (n as f64 - 1.0);
    let lo = math::floor(h) as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Mean and standard deviation (divisor n−1).
pub fn mean_sd(y: &[f64]) -> (f64, f64) {
    let n = y.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, math::sqrt(ss / (n as f64 - 1.0)))
}

/// Centered autocovariance at `lag` with divisor n.
pub fn autocov(y: &[f64], lag: usize) -> f64 {
    let n = y.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let mut acc = 0.0;
    for i in 0..n - lag {
        acc += (y[i] - mean) * (y[i + lag] - mean);
    }
    acc / n as f64
}

pub fn require_finite(y: &[f64]) -> Result<()> {
    if y.is_empty() {
        return Err(Error::Data("empty series".into()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("series contains non-finite values".into()));
    }
    Ok(())
}
