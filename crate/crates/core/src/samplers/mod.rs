//! Inference algorithms.
//!
//! All chains share one Metropolis-Hastings core, one Gaussian proposal
//! type (random-walk or independent) and one finite burn-in adaptation
//! plan: at iterations a_j = j·⌊B/J⌋ the proposal moments are refreshed
//! from the draws so far (and the ABC tolerance steps down its ladder);
//! after a_J everything is frozen so the post-burn-in kernel is
//! time-homogeneous.
//!
//! Simulation calls are counted separately for the setup phase (initial
//! state search, initial history) and the chain loop; the accelerated
//! samplers' structural guarantee is exactly one model call (AABC) or
//! one batch of m calls (ABSL) per iteration.

mod abc;
mod bsl;
mod exact;
mod smc;

pub use abc::{run_aabc, run_abc_mcmc, run_abc_mcmc_m, run_accept_reject, RejectionSample};
pub use bsl::{run_absl, run_bsl};
pub use exact::{bootstrap_pf_loglik, run_exact_ma2, run_pmcmc};
pub use smc::{run_abc_smc, ParticleSet};

use crate::calibration::EpsilonSchedule;
use crate::clock::Clock;
use crate::dist::Mvn;
use crate::error::{Error, Result};
use crate::history::WeightScheme;
use crate::linalg;
use crate::math;
use crate::models::{Model, Prior, RefCtx};
use crate::rng::RngStream;
use alloc::format;
use alloc::vec::Vec;

/// Cap on prior draws when hunting for a valid initial state.
pub const INIT_SEARCH_TRIES: usize = 100_000;

/// Stream ids carved out of a sampler's parent stream.
pub(crate) const STREAM_SETUP: u64 = 1;
pub(crate) const STREAM_CHAIN: u64 = 2;
pub(crate) const STREAM_MODEL: u64 = 3;
pub(crate) const STREAM_HISTORY: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProposalKind {
    RandomWalk,
    Independent,
}

/// Gaussian proposal N(·; μ̃, Σ̃): centered at the current state for
/// random walks, at μ̃ for independent sampling. Σ̃ = c × base covariance.
#[derive(Debug, Clone)]
pub struct GaussianProposal {
    pub kind: ProposalKind,
    mvn: Mvn,
}

impl GaussianProposal {
    pub fn from_moments(kind: ProposalKind, mean: Vec<f64>, cov: &[f64], c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::InvalidParam(format!("proposal scale c = {c}")));
        }
        let scaled: Vec<f64> = cov.iter().map(|v| v * c).collect();
        Ok(GaussianProposal {
            kind,
            mvn: Mvn::new(mean, &scaled)?,
        })
    }

    pub fn from_prior(kind: ProposalKind, prior: &Prior, c: f64) -> Result<Self> {
        Self::from_moments(kind, prior.mean(), &prior.cov(), c)
    }

    pub fn mean(&self) -> &[f64] {
        self.mvn.mean()
    }

    pub fn propose(&self, current: &[f64], rng: &mut RngStream) -> Vec<f64> {
        match self.kind {
            ProposalKind::RandomWalk => self.mvn.sample_centered(current, rng),
            ProposalKind::Independent => self.mvn.sample(rng),
        }
    }

    /// log q(to | from).
    pub fn log_q(&self, from: &[f64], to: &[f64]) -> f64 {
        match self.kind {
            ProposalKind::RandomWalk => self.mvn.logpdf_centered(to, from),
            ProposalKind::Independent => self.mvn.logpdf(to),
        }
    }

    /// log N(x; μ̃, Σ̃) regardless of kind (the AABC/ABSL ratio).
    pub fn log_density_at(&self, x: &[f64]) -> f64 {
        self.mvn.logpdf(x)
    }
}

/// Anything usable as the plain ABC-MCMC kernel's proposal: the adapted
/// Gaussians, or the prior itself (independent draws).
pub trait ProposalDensity {
    fn propose(&self, current: &[f64], rng: &mut RngStream) -> Vec<f64>;
    /// log q(to | from).
    fn log_q(&self, from: &[f64], to: &[f64]) -> f64;
}

impl ProposalDensity for GaussianProposal {
    fn propose(&self, current: &[f64], rng: &mut RngStream) -> Vec<f64> {
        GaussianProposal::propose(self, current, rng)
    }

    fn log_q(&self, from: &[f64], to: &[f64]) -> f64 {
        GaussianProposal::log_q(self, from, to)
    }
}

impl ProposalDensity for Prior {
    fn propose(&self, _current: &[f64], rng: &mut RngStream) -> Vec<f64> {
        self.sample(rng)
    }

    fn log_q(&self, _from: &[f64], to: &[f64]) -> f64 {
        self.logpdf(to)
    }
}

/// Refresh a proposal from the draws recorded so far: μ̃ = sample mean,
/// Σ̃ = c × sample covariance (jittered when degenerate).
pub fn adapt_proposal(
    draws: &[f64],
    rows: usize,
    dim: usize,
    c: f64,
    kind: ProposalKind,
) -> Result<GaussianProposal> {
    if rows < 2 {
        return Err(Error::InvalidParam(
            "proposal adaptation needs at least 2 draws".into(),
        ));
    }
    let (mean, cov) = linalg::mean_cov(&draws[..rows * dim], rows, dim);
    GaussianProposal::from_moments(kind, mean, &cov, c)
}

/// Burn-in adaptation plan: points a_j = j·⌊B/J⌋ for j = 1..=J.
/// `burn_in = 0` disables adaptation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdaptationPlan {
    pub burn_in: usize,
    pub j_steps: usize,
}

impl AdaptationPlan {
    pub fn new(burn_in: usize, j_steps: usize) -> Result<Self> {
        if burn_in > 0 && (j_steps == 0 || burn_in < j_steps) {
            return Err(Error::InvalidParam(format!(
                "plan needs burn_in >= j_steps >= 1, got B={burn_in}, J={j_steps}"
            )));
        }
        Ok(AdaptationPlan { burn_in, j_steps })
    }

    /// Level j when iteration t is the adaptation point a_j.
    pub fn level_at(&self, t: usize) -> Option<usize> {
        if self.burn_in == 0 {
            return None;
        }
        let b = self.burn_in / self.j_steps;
        if b == 0 || t % b != 0 {
            return None;
        }
        let j = t / b;
        (1..=self.j_steps).contains(&j).then_some(j)
    }

    pub fn points(&self) -> Vec<usize> {
        if self.burn_in == 0 {
            return Vec::new();
        }
        let b = self.burn_in / self.j_steps;
        (1..=self.j_steps).map(|j| j * b).collect()
    }
}

/// Metropolis-Hastings coin with the zero-density conventions: a zero
/// numerator rejects, a zero denominator under a positive numerator
/// accepts, and 0/0 rejects.
pub fn mh_accept(log_num: f64, log_den: f64, rng: &mut RngStream) -> bool {
    if log_num.is_nan() || log_den.is_nan() || log_num == f64::NEG_INFINITY {
        return false;
    }
    if log_den == f64::NEG_INFINITY {
        return true;
    }
    let log_alpha = log_num - log_den;
    if log_alpha >= 0.0 {
        return true;
    }
    math::ln(rng.next_open01()) < log_alpha
}

/// Chain settings shared by the MCMC samplers. Defaults mirror the
/// benchmark setup: 50000 iterations with 10000 burn-in, J = 15, m = 50
/// pseudo-datasets, 500 initial history entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    /// Chain length M.
    pub iters: usize,
    /// Burn-in length B (< M).
    pub burn_in: usize,
    /// Adaptation points J during burn-in.
    pub j_steps: usize,
    /// Pseudo-datasets per parameter for the synthetic-likelihood family.
    pub m: usize,
    /// Initial history size for the recycling samplers.
    pub n0: usize,
    /// Proposal scale; ≤ 0 selects the per-kind default
    /// (2.38²/q random-walk, 3 ABC independent, 1.5 synthetic-likelihood).
    pub c: f64,
    pub weights: WeightScheme,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            iters: 50_000,
            burn_in: 10_000,
            j_steps: 15,
            m: 50,
            n0: 500,
            c: 0.0,
            weights: WeightScheme::Uniform,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iters {
            return Err(Error::InvalidParam(format!(
                "burn_in {} must be below iters {}",
                self.burn_in, self.iters
            )));
        }
        if self.m < 2 {
            return Err(Error::InvalidParam("m must be at least 2".into()));
        }
        AdaptationPlan::new(self.burn_in, self.j_steps).map(|_| ())
    }

    pub fn plan(&self) -> AdaptationPlan {
        AdaptationPlan {
            burn_in: self.burn_in,
            j_steps: self.j_steps,
        }
    }

    pub(crate) fn scale_or(&self, default: f64) -> f64 {
        if self.c > 0.0 {
            self.c
        } else {
            default
        }
    }
}

pub(crate) fn rw_default_c(dim: usize) -> f64 {
    2.38 * 2.38 / dim as f64
}

/// Observed dataset prepared for repeated summarization.
#[derive(Debug, Clone)]
pub struct Observed {
    pub y: Vec<f64>,
    pub s0: Vec<f64>,
    pub ctx: RefCtx,
}

impl Observed {
    pub fn new(model: &dyn Model, y: Vec<f64>) -> Result<Self> {
        let ctx = model.make_ref_ctx(&y);
        let s0 = model.summarize(&y, &ctx)?;
        Ok(Observed { y, s0, ctx })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Everything a chain records. `values` holds the per-iteration
/// discrepancy (ABC family) or log synthetic-likelihood / log-likelihood
/// (SL family, exact chains); `eps_used` is NaN outside the ABC family.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub dim: usize,
    pub burn_in: usize,
    pub draws: Vec<f64>,
    pub proposals: Vec<f64>,
    pub accepted: Vec<bool>,
    pub values: Vec<f64>,
    pub eps_used: Vec<f64>,
    pub wall_ns: Vec<u64>,
    pub cpu_seconds: f64,
    pub sim_calls: u64,
    pub setup_sim_calls: u64,
    /// Proposals rejected without simulation (outside the prior support).
    pub skipped_proposals: u64,
    /// Iterations flagged by numerical rescue paths (e.g. a synthetic
    /// likelihood whose covariance never factorized).
    pub flagged: u64,
}

impl ChainOutput {
    pub(crate) fn with_capacity(dim: usize, iters: usize, burn_in: usize) -> Self {
        ChainOutput {
            dim,
            burn_in,
            draws: Vec::with_capacity(iters * dim),
            proposals: Vec::with_capacity(iters * dim),
            accepted: Vec::with_capacity(iters),
            values: Vec::with_capacity(iters),
            eps_used: Vec::with_capacity(iters),
            wall_ns: Vec::with_capacity(iters),
            cpu_seconds: 0.0,
            sim_calls: 0,
            setup_sim_calls: 0,
            skipped_proposals: 0,
            flagged: 0,
        }
    }

    pub fn iters(&self) -> usize {
        self.accepted.len()
    }

    pub fn draw(&self, t: usize) -> &[f64] {
        &self.draws[t * self.dim..(t + 1) * self.dim]
    }

    /// One component of every post-burn-in draw.
    pub fn post_burn_component(&self, s: usize) -> Vec<f64> {
        (self.burn_in..self.iters())
            .map(|t| self.draws[t * self.dim + s])
            .collect()
    }

    /// Post-burn-in draws, flat row-major.
    pub fn post_burn_draws(&self) -> &[f64] {
        &self.draws[self.burn_in * self.dim..]
    }

    pub fn posterior_mean(&self) -> Vec<f64> {
        let rows = self.iters() - self.burn_in;
        let mut mean = alloc::vec![0.0; self.dim];
        for t in self.burn_in..self.iters() {
            for d in 0..self.dim {
                mean[d] += self.draws[t * self.dim + d];
            }
        }
        for v in &mut mean {
            *v /= rows as f64;
        }
        mean
    }

    pub fn acceptance_rate(&self) -> f64 {
        let post = &self.accepted[self.burn_in..];
        post.iter().filter(|&&a| a).count() as f64 / post.len() as f64
    }

    /// Deterministic pseudo-CPU figure: one microsecond per model
    /// simulation. Used where byte-reproducible efficiency reporting is
    /// required; `cpu_seconds` holds the measured wall time.
    pub fn pseudo_cpu_seconds(&self) -> f64 {
        (self.sim_calls + self.setup_sim_calls) as f64 * 1e-6
    }
}

/// Per-iteration stopwatch built on the injected clock.
pub(crate) struct Stopwatch<'a> {
    clock: &'a dyn Clock,
    start: u64,
    last: u64,
}

impl<'a> Stopwatch<'a> {
    pub(crate) fn new(clock: &'a dyn Clock) -> Self {
        let now = clock.now_ns();
        Stopwatch {
            clock,
            start: now,
            last: now,
        }
    }

    pub(crate) fn lap(&mut self) -> u64 {
        let now = self.clock.now_ns();
        let d = now.saturating_sub(self.last);
        self.last = now;
        d
    }

    pub(crate) fn total_seconds(&self) -> f64 {
        self.clock.now_ns().saturating_sub(self.start) as f64 * 1e-9
    }
}

/// Guarded search for a starting point with discrepancy below `eps`.
pub(crate) fn find_initial_state(
    model: &dyn Model,
    obs: &Observed,
    metric: &crate::calibration::DiscrepancyMetric,
    eps: f64,
    rng: &mut RngStream,
    sim_calls: &mut u64,
) -> Result<Vec<f64>> {
    for _ in 0..INIT_SEARCH_TRIES {
        let theta = model.prior().sample(rng);
        let y = model.simulate(&theta, obs.len(), rng)?;
        *sim_calls += 1;
        let s = model.summarize(&y, &obs.ctx)?;
        if metric.discrepancy(&s)? < eps {
            return Ok(theta);
        }
    }
    Err(Error::Exhausted(format!(
        "no initial state below tolerance {eps} in {INIT_SEARCH_TRIES} prior draws"
    )))
}

/// Simulate at `theta` and return the discrepancy of its summary.
pub(crate) fn simulate_discrepancy(
    model: &dyn Model,
    obs: &Observed,
    metric: &crate::calibration::DiscrepancyMetric,
    theta: &[f64],
    rng: &mut RngStream,
    sim_calls: &mut u64,
) -> Result<f64> {
    let y = model.simulate(theta, obs.len(), rng)?;
    *sim_calls += 1;
    let s = model.summarize(&y, &obs.ctx)?;
    metric.discrepancy(&s)
}

/// Shared burn-in refresher: steps the tolerance down its ladder and
/// re-fits the proposal from the draws recorded so far.
pub(crate) struct Adaptor<'a> {
    plan: AdaptationPlan,
    schedule: Option<&'a EpsilonSchedule>,
    c: f64,
    kind: ProposalKind,
}

impl<'a> Adaptor<'a> {
    pub(crate) fn new(
        plan: AdaptationPlan,
        schedule: Option<&'a EpsilonSchedule>,
        c: f64,
        kind: ProposalKind,
    ) -> Result<Self> {
        if let Some(s) = schedule {
            if plan.burn_in > 0 && s.j_steps() != plan.j_steps {
                return Err(Error::InvalidParam(format!(
                    "schedule has {} steps but the plan expects {}",
                    s.j_steps(),
                    plan.j_steps
                )));
            }
        }
        Ok(Adaptor {
            plan,
            schedule,
            c,
            kind,
        })
    }

    /// At an adaptation point, update `proposal` and `eps` in place.
    pub(crate) fn maybe_refresh(
        &self,
        t: usize,
        draws: &[f64],
        dim: usize,
        proposal: &mut GaussianProposal,
        eps: &mut f64,
    ) -> Result<()> {
        let Some(j) = self.plan.level_at(t) else {
            return Ok(());
        };
        if let Some(schedule) = self.schedule {
            *eps = schedule.levels()[j];
        }
        let rows = draws.len() / dim;
        if rows >= 2 {
            *proposal = adapt_proposal(draws, rows, dim, self.c, self.kind)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn mh_accept_conventions() {
        let mut rng = RngStream::new(500, 0);
        assert!(mh_accept(-1.0, -1.0, &mut rng)); // equal => alpha 1
        assert!(!mh_accept(f64::NEG_INFINITY, -1.0, &mut rng));
        assert!(mh_accept(-1.0, f64::NEG_INFINITY, &mut rng));
        assert!(!mh_accept(f64::NEG_INFINITY, f64::NEG_INFINITY, &mut rng));
        assert!(!mh_accept(f64::NAN, 0.0, &mut rng));
    }

    #[test]
    fn mh_accept_frequency_matches_ratio() {
        let mut rng = RngStream::new(501, 0);
        let trials = 100_000;
        let hits = (0..trials)
            .filter(|_| mh_accept(math::ln(0.5), 0.0, &mut rng))
            .count();
        let freq = hits as f64 / trials as f64;
        assert!((freq - 0.5).abs() < 0.01, "freq = {freq}");
    }

    #[test]
    fn adapt_proposal_two_point_arithmetic() {
        let draws = [0.0, 0.0, 2.0, 2.0];
        let p = adapt_proposal(&draws, 2, 2, 1.0, ProposalKind::Independent).unwrap();
        assert_eq!(p.mean(), &[1.0, 1.0]);
        // covariance [[2,2],[2,2]] is singular: sampling must still work
        let mut rng = RngStream::new(502, 0);
        let x = p.propose(&[0.0, 0.0], &mut rng);
        assert!(x.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn adapt_proposal_constant_draws_is_jitter_only() {
        let draws = [1.5, 1.5, 1.5, 1.5, 1.5, 1.5];
        let p = adapt_proposal(&draws, 3, 2, 2.0, ProposalKind::RandomWalk).unwrap();
        let mut rng = RngStream::new(503, 0);
        let x = p.propose(&[1.5, 1.5], &mut rng);
        // jitter-only covariance: proposals barely move
        assert!((x[0] - 1.5).abs() < 1e-3);
    }

    #[test]
    fn plan_points_and_levels() {
        let plan = AdaptationPlan::new(10_000, 15).unwrap();
        let pts = plan.points();
        assert_eq!(pts.len(), 15);
        assert_eq!(pts[0], 666);
        assert_eq!(pts[14], 9990);
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
        assert!(*pts.last().unwrap() <= 10_000);
        assert_eq!(plan.level_at(666), Some(1));
        assert_eq!(plan.level_at(667), None);
        assert_eq!(plan.level_at(9990), Some(15));
        assert_eq!(plan.level_at(10_656), None); // beyond a_J
        let none = AdaptationPlan::new(0, 15).unwrap();
        assert_eq!(none.points(), Vec::<usize>::new());
        assert!(AdaptationPlan::new(5, 10).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = SamplerConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.burn_in = cfg.iters;
        assert!(cfg.validate().is_err());
        let mut cfg = SamplerConfig::default();
        cfg.m = 1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn mh_kernel_is_exact_for_a_frozen_perturbed_target() {
        // five parameter points, a frozen history, a symmetric proposal:
        // the chain's empirical law must converge to π̂ ∝ p(θ)ĥ(θ)
        use crate::history::{AbcHistory, WeightScheme};
        let states = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let mut rng = RngStream::new(510, 0);
        let mut hist = AbcHistory::new(1);
        for _ in 0..400 {
            let zeta = -3.0 + 6.0 * rng.next_f64();
            hist.append(&[zeta], rng.next_f64()).unwrap();
        }
        let eps = 0.35;
        let h: Vec<f64> = states
            .iter()
            .map(|&s| hist.h_hat(&[s], eps, WeightScheme::Uniform).unwrap())
            .collect();
        assert!(h.iter().all(|&v| v > 0.0), "need positive h at all states");
        // flat prior over the five states; uniform independent proposal
        let mut counts = [0u64; 5];
        let mut cur = 2usize;
        let iters = 1_000_000;
        for _ in 0..iters {
            let prop = rng.next_below(5) as usize;
            if mh_accept(math::ln(h[prop]), math::ln(h[cur]), &mut rng) {
                cur = prop;
            }
            counts[cur] += 1;
        }
        let total: f64 = h.iter().sum();
        let mut tv = 0.0;
        for i in 0..5 {
            tv += (counts[i] as f64 / iters as f64 - h[i] / total).abs();
        }
        tv *= 0.5;
        assert!(tv < 0.02, "TV to the perturbed target = {tv}");
    }

    #[test]
    fn chain_output_accessors() {
        let mut out = ChainOutput::with_capacity(2, 4, 2);
        for t in 0..4 {
            out.draws.extend_from_slice(&[t as f64, -(t as f64)]);
            out.proposals.extend_from_slice(&[0.0, 0.0]);
            out.accepted.push(t % 2 == 0);
            out.values.push(0.0);
            out.eps_used.push(f64::NAN);
            out.wall_ns.push(1);
        }
        assert_eq!(out.iters(), 4);
        assert_eq!(out.post_burn_component(0), vec![2.0, 3.0]);
        assert_eq!(out.posterior_mean(), vec![2.5, -2.5]);
        assert_eq!(out.acceptance_rate(), 0.5);
    }
}
