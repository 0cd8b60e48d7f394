//! Discrepancy metric and tolerance schedule calibration.
//!
//! The ABC samplers measure simulations against the observed data with
//! the quadratic form δ = (S(y)−S(y₀))ᵀ A (S(y)−S(y₀)). A is estimated
//! by alternating prior exploration with local covariance estimation;
//! the initial tolerance is a quantile of the exploration discrepancies
//! and the final one comes from a random-walk pilot chain. All samplers
//! then share one geometric tolerance ladder between the two.

use crate::dist;
use crate::error::{Error, Result};
use crate::linalg;
use crate::math;
use crate::models::stats::quantile_type7;
use crate::models::{Model, RefCtx};
use crate::rng::RngStream;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Positive semidefinite quadratic discrepancy anchored at the observed
/// summary s₀.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyMetric {
    pub a: Vec<f64>,
    pub s0: Vec<f64>,
    pub p: usize,
}

impl DiscrepancyMetric {
    pub fn new(a: Vec<f64>, s0: Vec<f64>) -> Result<Self> {
        let p = s0.len();
        if a.len() != p * p {
            return Err(Error::Dimension {
                expected: p * p,
                got: a.len(),
            });
        }
        let mut sym = a;
        linalg::symmetrize(&mut sym, p);
        Ok(DiscrepancyMetric { a: sym, s0, p })
    }

    pub fn identity(s0: Vec<f64>) -> Self {
        let p = s0.len();
        let mut a = vec![0.0; p * p];
        for i in 0..p {
            a[i * p + i] = 1.0;
        }
        DiscrepancyMetric { a, s0, p }
    }

    /// δ(s) = (s − s₀)ᵀ A (s − s₀).
    pub fn discrepancy(&self, s: &[f64]) -> Result<f64> {
        if s.len() != self.p {
            return Err(Error::Dimension {
                expected: self.p,
                got: s.len(),
            });
        }
        let diff: Vec<f64> = s.iter().zip(&self.s0).map(|(a, b)| a - b).collect();
        Ok(linalg::quad_form(&self.a, self.p, &diff))
    }
}

/// Strictly decreasing positive tolerance ladder ε₀ > … > ε_J.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSchedule {
    eps: Vec<f64>,
}

impl EpsilonSchedule {
    pub fn new(eps: Vec<f64>) -> Result<Self> {
        if eps.is_empty() {
            return Err(Error::InvalidParam("empty tolerance schedule".into()));
        }
        for w in eps.windows(2) {
            if !(w[0] > w[1]) {
                return Err(Error::InvalidParam(format!(
                    "schedule must strictly decrease, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if eps.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
            return Err(Error::InvalidParam("tolerances must be positive".into()));
        }
        Ok(EpsilonSchedule { eps })
    }

    /// ε_j = exp(log ε₀ + j (log ε_J − log ε₀)/J), j = 0..=J.
    pub fn log_spaced(eps0: f64, eps_j: f64, j_steps: usize) -> Result<Self> {
        if !(eps0 > eps_j && eps_j > 0.0) {
            return Err(Error::InvalidParam(format!(
                "need eps0 > epsJ > 0, got ({eps0}, {eps_j})"
            )));
        }
        if j_steps == 0 {
            return Err(Error::InvalidParam("need at least one step".into()));
        }
        let (l0, l1) = (math::ln(eps0), math::ln(eps_j));
        let mut eps: Vec<f64> = (0..=j_steps)
            .map(|j| math::exp(l0 + j as f64 * (l1 - l0) / j_steps as f64))
            .collect();
        // pin the endpoints exactly
        eps[0] = eps0;
        eps[j_steps] = eps_j;
        EpsilonSchedule::new(eps)
    }

    /// Single-tolerance schedule (no annealing).
    pub fn constant(eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidParam(format!("tolerance {eps}")));
        }
        Ok(EpsilonSchedule { eps: vec![eps] })
    }

    pub fn levels(&self) -> &[f64] {
        &self.eps
    }

    /// Number of steps J (levels minus one).
    pub fn j_steps(&self) -> usize {
        self.eps.len() - 1
    }

    pub fn first(&self) -> f64 {
        self.eps[0]
    }

    pub fn last(&self) -> f64 {
        *self.eps.last().unwrap()
    }
}

/// Metric estimation settings; the defaults mirror the benchmark setup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationConfig {
    pub rounds: usize,
    pub n_outer: usize,
    pub n_inner: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            rounds: 3,
            n_outer: 500,
            n_inner: 100,
        }
    }
}

/// Output of [`estimate_metric`]: the metric plus every exploration
/// discrepancy re-evaluated under the final A (for the ε₀ quantile).
#[derive(Debug, Clone)]
pub struct Calibration {
    pub metric: DiscrepancyMetric,
    pub exploration_deltas: Vec<f64>,
    pub sim_calls: u64,
}

/// Estimate the metric A: starting from the identity, repeatedly draw
/// prior/simulation pairs, locate the best-matching parameter, and set A
/// to the inverse covariance of summaries simulated there.
pub fn estimate_metric(
    model: &dyn Model,
    y0: &[f64],
    ctx: &RefCtx,
    cfg: &CalibrationConfig,
    rng: &mut RngStream,
) -> Result<Calibration> {
    if cfg.rounds == 0 || cfg.n_outer == 0 || cfg.n_inner < 2 {
        return Err(Error::InvalidParam(
            "calibration needs rounds >= 1, n_outer >= 1, n_inner >= 2".into(),
        ));
    }
    let s0 = model.summarize(y0, ctx)?;
    let p = s0.len();
    let n = y0.len();
    let mut metric = DiscrepancyMetric::identity(s0.clone());
    let mut sim_calls = 0u64;
    let mut all_summaries: Vec<Vec<f64>> = Vec::with_capacity(cfg.rounds * cfg.n_outer);

    for _ in 0..cfg.rounds {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for _ in 0..cfg.n_outer {
            let zeta = model.prior().sample(rng);
            let y = model.simulate(&zeta, n, rng)?;
            sim_calls += 1;
            let s = model.summarize(&y, ctx)?;
            let delta = metric.discrepancy(&s)?;
            if best.as_ref().map_or(true, |(d, _)| delta < *d) {
                best = Some((delta, zeta));
            }
            all_summaries.push(s);
        }
        let (_, zeta_star) = best.expect("n_outer >= 1");
        let mut flat = Vec::with_capacity(cfg.n_inner * p);
        for _ in 0..cfg.n_inner {
            let y = model.simulate(&zeta_star, n, rng)?;
            sim_calls += 1;
            flat.extend(model.summarize(&y, ctx)?);
        }
        let (_, cov) = linalg::mean_cov(&flat, cfg.n_inner, p);
        // jitter the covariance until it factors, then invert
        let (_, jitter) = dist::jittered_cholesky(&cov, p)?;
        let mut jittered = cov;
        if jitter > 0.0 {
            for i in 0..p {
                jittered[i * p + i] += jitter;
            }
        }
        let mut a = linalg::spd_inverse(&jittered, p)?;
        linalg::symmetrize(&mut a, p);
        metric = DiscrepancyMetric { a, s0: s0.clone(), p };
    }

    let exploration_deltas = all_summaries
        .iter()
        .map(|s| metric.discrepancy(s))
        .collect::<Result<Vec<f64>>>()?;
    Ok(Calibration {
        metric,
        exploration_deltas,
        sim_calls,
    })
}

/// ε₀: the 5% quantile of the exploration discrepancies.
pub fn initial_epsilon(cal: &Calibration) -> f64 {
    quantile_type7(&cal.exploration_deltas, 0.05)
}

/// Outcome of the tolerance pilot.
#[derive(Debug, Clone)]
pub struct PilotResult {
    pub eps0: f64,
    pub eps_final: f64,
    /// Adaptation windows that produced no acceptances and kept the
    /// previous tolerance.
    pub empty_windows: usize,
    pub sim_calls: u64,
}

/// Minimum accepted draws for a window to produce a tolerance update: a
/// 1% quantile estimated from fewer points is effectively the sample
/// minimum and ratchets the tolerance into unusable territory, so such
/// windows count as empty and retain the previous tolerance. Short
/// pilots cap the requirement at half a window so updates stay possible.
pub const MIN_WINDOW_ACCEPTS: usize = 100;

fn window_gate(window: usize) -> usize {
    MIN_WINDOW_ACCEPTS.min((window / 2).max(2))
}

/// Random-walk pilot chain: run the burn-in adaptation schedule, setting
/// each ε_j to the 1% quantile of the accepted discrepancies of the
/// preceding window; windows with fewer than [`MIN_WINDOW_ACCEPTS`]
/// acceptances keep the previous tolerance.
pub fn pilot_epsilon_run(
    model: &dyn Model,
    y0: &[f64],
    ctx: &RefCtx,
    cal: &Calibration,
    burn_in: usize,
    j_steps: usize,
    rng: &mut RngStream,
) -> Result<PilotResult> {
    let eps0 = initial_epsilon(cal);
    if !(eps0 > 0.0) {
        return Err(Error::Degenerate(format!(
            "non-positive initial tolerance {eps0}"
        )));
    }
    if j_steps == 0 || burn_in < j_steps {
        return Err(Error::InvalidParam(
            "pilot needs burn_in >= j_steps >= 1".into(),
        ));
    }
    let metric = &cal.metric;
    let prior = model.prior();
    let q = prior.dim();
    let n = y0.len();
    let mut sim_calls = 0u64;

    // guarded initial-state search
    let mut state: Option<Vec<f64>> = None;
    for _ in 0..crate::samplers::INIT_SEARCH_TRIES {
        let theta = prior.sample(rng);
        let y = model.simulate(&theta, n, rng)?;
        sim_calls += 1;
        let delta = metric.discrepancy(&model.summarize(&y, ctx)?)?;
        if delta < eps0 {
            state = Some(theta);
            break;
        }
    }
    let mut theta = state.ok_or_else(|| {
        Error::Exhausted(format!(
            "no initial state with discrepancy below {eps0} found for the pilot"
        ))
    })?;

    let c = 2.38 * 2.38 / q as f64;
    let mut cov = prior.cov();
    for v in &mut cov {
        *v *= c;
    }
    let mut proposal = dist::Mvn::new(prior.mean(), &cov)?;

    let b = burn_in / j_steps;
    let mut eps = eps0;
    let mut eps_final = eps0;
    let mut empty_windows = 0usize;
    let mut window_deltas: Vec<f64> = Vec::new();
    let mut draws: Vec<f64> = Vec::with_capacity(burn_in * q);

    for t in 1..=burn_in {
        let zeta = proposal.sample_centered(&theta, rng);
        if prior.in_support(&zeta) {
            let y = model.simulate(&zeta, n, rng)?;
            sim_calls += 1;
            let delta = metric.discrepancy(&model.summarize(&y, ctx)?)?;
            let log_ratio = prior.logpdf(&zeta) - prior.logpdf(&theta);
            if delta < eps && crate::samplers::mh_accept(log_ratio, 0.0, rng) {
                theta = zeta;
                window_deltas.push(delta);
            }
        }
        draws.extend_from_slice(&theta);

        if b > 0 && t % b == 0 && t / b <= j_steps {
            if window_deltas.len() < window_gate(b) {
                empty_windows += 1;
            } else {
                eps = quantile_type7(&window_deltas, 0.01).min(eps);
                window_deltas.clear();
            }
            eps_final = eps;
            let rows = draws.len() / q;
            if rows >= 2 {
                let (mean, mut cv) = linalg::mean_cov(&draws, rows, q);
                for v in &mut cv {
                    *v *= c;
                }
                proposal = dist::Mvn::new(mean, &cv)?;
            }
        }
    }

    if !(eps_final < eps0) {
        return Err(Error::Degenerate(
            "pilot did not reduce the tolerance; schedule would be empty".into(),
        ));
    }
    Ok(PilotResult {
        eps0,
        eps_final,
        empty_windows,
        sim_calls,
    })
}

/// Full calibration: metric, then pilot, then the shared log-spaced
/// ladder between ε₀ and ε_J.
pub fn calibrate(
    model: &dyn Model,
    y0: &[f64],
    ctx: &RefCtx,
    cfg: &CalibrationConfig,
    burn_in: usize,
    j_steps: usize,
    rng: &mut RngStream,
) -> Result<(DiscrepancyMetric, EpsilonSchedule, u64)> {
    let cal = estimate_metric(model, y0, ctx, cfg, rng)?;
    let pilot = pilot_epsilon_run(model, y0, ctx, &cal, burn_in, j_steps, rng)?;
    let schedule = EpsilonSchedule::log_spaced(pilot.eps0, pilot.eps_final, j_steps)?;
    Ok((cal.metric, schedule, cal.sim_calls + pilot.sim_calls))
}
