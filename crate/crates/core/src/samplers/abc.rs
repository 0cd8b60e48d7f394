//! ABC samplers: accept/reject, plain MCMC, MCMC with burn-in
//! adaptation, and the history-recycling accelerated variant.

use super::*;
use crate::calibration::DiscrepancyMetric;
use crate::history::AbcHistory;

/// Accept/Reject output: draws whose discrepancy beat the tolerance,
/// with the matching discrepancies. `exhausted` marks a partial result.
#[derive(Debug, Clone)]
pub struct RejectionSample {
    pub dim: usize,
    pub thetas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub sim_calls: u64,
    pub exhausted: bool,
    pub cpu_seconds: f64,
}

impl RejectionSample {
    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn theta(&self, i: usize) -> &[f64] {
        &self.thetas[i * self.dim..(i + 1) * self.dim]
    }
}

/// Draw from the prior and keep parameters whose simulated summary lands
/// within `eps` of the observed one, until `draws` are collected or the
/// total simulation budget `max_tries` runs out.
#[allow(clippy::too_many_arguments)]
pub fn run_accept_reject(
    model: &dyn Model,
    obs: &Observed,
    metric: &DiscrepancyMetric,
    eps: f64,
    draws: usize,
    max_tries: u64,
    rng: &mut RngStream,
    clock: &dyn Clock,
) -> Result<RejectionSample> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParam(format!("tolerance {eps}")));
    }
    let watch = Stopwatch::new(clock);
    let q = model.param_dim();
    let mut prior_rng = rng.substream(STREAM_CHAIN);
    let mut model_rng = rng.substream(STREAM_MODEL);
    let mut out = RejectionSample {
        dim: q,
        thetas: Vec::with_capacity(draws * q),
        deltas: Vec::with_capacity(draws),
        sim_calls: 0,
        exhausted: false,
        cpu_seconds: 0.0,
    };
    while out.len() < draws {
        if out.sim_calls >= max_tries {
            out.exhausted = true;
            break;
        }
        let theta = model.prior().sample(&mut prior_rng);
        let delta = simulate_discrepancy(
            model,
            obs,
            metric,
            &theta,
            &mut model_rng,
            &mut out.sim_calls,
        )?;
        if delta < eps {
            out.thetas.extend_from_slice(&theta);
            out.deltas.push(delta);
        }
    }
    out.cpu_seconds = watch.total_seconds();
    Ok(out)
}

/// Plain ABC-MCMC at a fixed tolerance with a fixed proposal.
#[allow(clippy::too_many_arguments)]
pub fn run_abc_mcmc(
    model: &dyn Model,
    obs: &Observed,
    metric: &DiscrepancyMetric,
    eps: f64,
    proposal: &dyn ProposalDensity,
    iters: usize,
    burn_in: usize,
    rng: &mut RngStream,
    clock: &dyn Clock,
) -> Result<ChainOutput> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParam(format!("tolerance {eps}")));
    }
    if burn_in >= iters {
        return Err(Error::InvalidParam("burn_in must be below iters".into()));
    }
    let q = model.param_dim();
    let prior = model.prior();
    let mut setup_rng = rng.substream(STREAM_SETUP);
    let mut chain_rng = rng.substream(STREAM_CHAIN);
    let mut model_rng = rng.substream(STREAM_MODEL);

    let mut out = ChainOutput::with_capacity(q, iters, burn_in);
    let mut watch = Stopwatch::new(clock);
    let theta = find_initial_state(model, obs, metric, eps, &mut setup_rng, &mut out.setup_sim_calls)?;
    let mut theta = theta;
    watch.lap();

    for _t in 1..=iters {
        let zeta = proposal.propose(&theta, &mut chain_rng);
        let mut accepted = false;
        let mut value = f64::NAN;
        if prior.in_support(&zeta) {
            let delta = simulate_discrepancy(
                model,
                obs,
                metric,
                &zeta,
                &mut model_rng,
                &mut out.sim_calls,
            )?;
            value = delta;
            let log_num = if delta < eps {
                prior.logpdf(&zeta) + proposal.log_q(&zeta, &theta)
            } else {
                f64::NEG_INFINITY
            };
            let log_den = prior.logpdf(&theta) + proposal.log_q(&theta, &zeta);
            accepted = mh_accept(log_num, log_den, &mut chain_rng);
        } else {
            out.skipped_proposals += 1;
        }
        out.proposals.extend_from_slice(&zeta);
        if accepted {
            theta = zeta;
        }
        out.draws.extend_from_slice(&theta);
        out.accepted.push(accepted);
        out.values.push(value);
        out.eps_used.push(eps);
        out.wall_ns.push(watch.lap());
    }
    out.cpu_seconds = watch.total_seconds();
    Ok(out)
}

/// ABC-MCMC with the decreasing tolerance ladder and finite proposal
/// adaptation during burn-in; random-walk or independent kernel.
#[allow(clippy::too_many_arguments)]
pub fn run_abc_mcmc_m(
    model: &dyn Model,
    obs: &Observed,
    metric: &DiscrepancyMetric,
    schedule: &EpsilonSchedule,
    kind: ProposalKind,
    cfg: &SamplerConfig,
    rng: &mut RngStream,
    clock: &dyn Clock,
) -> Result<ChainOutput> {
    cfg.validate()?;
    let q = model.param_dim();
    let prior = model.prior();
    let c = cfg.scale_or(match kind {
        ProposalKind::RandomWalk => rw_default_c(q),
        ProposalKind::Independent => 3.0,
    });
    let plan = cfg.plan();
    let adaptor = Adaptor::new(plan, Some(schedule), c, kind)?;

    let mut setup_rng = rng.substream(STREAM_SETUP);
    let mut chain_rng = rng.substream(STREAM_CHAIN);
    let mut model_rng = rng.substream(STREAM_MODEL);

    let mut out = ChainOutput::with_capacity(q, cfg.iters, cfg.burn_in);
    let mut watch = Stopwatch::new(clock);
    let mut eps = schedule.first();
    let mut theta =
        find_initial_state(model, obs, metric, eps, &mut setup_rng, &mut out.setup_sim_calls)?;
    let mut proposal = GaussianProposal::from_prior(kind, prior, c)?;
    watch.lap();

    for t in 1..=cfg.iters {
        adaptor.maybe_refresh(t, &out.draws, q, &mut proposal, &mut eps)?;
        let zeta = proposal.propose(&theta, &mut chain_rng);
        let mut accepted = false;
        let mut value = f64::NAN;
        if prior.in_support(&zeta) {
            let delta = simulate_discrepancy(
                model,
                obs,
                metric,
                &zeta,
                &mut model_rng,
                &mut out.sim_calls,
            )?;
            value = delta;
            let log_num = if delta < eps {
                prior.logpdf(&zeta) + proposal.log_q(&zeta, &theta)
            } else {
                f64::NEG_INFINITY
            };
            let log_den = prior.logpdf(&theta) + proposal.log_q(&theta, &zeta);
            accepted = mh_accept(log_num, log_den, &mut chain_rng);
        } else {
            out.skipped_proposals += 1;
        }
        out.proposals.extend_from_slice(&zeta);
        if accepted {
            theta = zeta;
        }
        out.draws.extend_from_slice(&theta);
        out.accepted.push(accepted);
        out.values.push(value);
        out.eps_used.push(eps);
        out.wall_ns.push(watch.lap());
    }
    out.cpu_seconds = watch.total_seconds();
    Ok(out)
}

/// Accelerated ABC-MCMC: per iteration draw the chain proposal ζ* and an
/// independent history proposal ζ̃* from the same adapted Gaussian,
/// simulate only at ζ̃*, append (ζ̃*, δ̃*) to the history, and accept with
/// the kNN-estimated acceptance probabilities at ζ* and at the current
/// state. Exactly one model simulation per iteration.
///
/// `warm_start` replaces the prior-simulated initial history (its size
/// overrides `cfg.n0`), allowing a run to resume from a snapshot.
#[allow(clippy::too_many_arguments)]
pub fn run_aabc(
    model: &dyn Model,
    obs: &Observed,
    metric: &DiscrepancyMetric,
    schedule: &EpsilonSchedule,
    cfg: &SamplerConfig,
    warm_start: Option<AbcHistory>,
    rng: &mut RngStream,
    clock: &dyn Clock,
) -> Result<(ChainOutput, AbcHistory)> {
    cfg.validate()?;
    if cfg.n0 == 0 && warm_start.is_none() {
        return Err(Error::InvalidParam(
            "recycling sampler needs a nonempty initial history".into(),
        ));
    }
    let q = model.param_dim();
    let prior = model.prior();
    // the recycling samplers share the c = 1.5 independence-kernel scale
    let c = cfg.scale_or(1.5);
    let adaptor = Adaptor::new(cfg.plan(), Some(schedule), c, ProposalKind::Independent)?;

    let mut setup_rng = rng.substream(STREAM_SETUP);
    let mut chain_rng = rng.substream(STREAM_CHAIN);
    let mut model_rng = rng.substream(STREAM_MODEL);
    let mut hist_rng = rng.substream(STREAM_HISTORY);

    let mut out = ChainOutput::with_capacity(q, cfg.iters, cfg.burn_in);
    let mut watch = Stopwatch::new(clock);

    // initial history: a snapshot, or fresh prior simulations
    let mut history = match warm_start {
        Some(h) => {
            if h.dim() != q || h.is_empty() {
                return Err(Error::InvalidParam(
                    "warm-start history is empty or has the wrong dimension".into(),
                ));
            }
            h
        }
        None => {
            let mut h = AbcHistory::new(q);
            for _ in 0..cfg.n0 {
                let zeta = prior.sample(&mut hist_rng);
                let delta = simulate_discrepancy(
                    model,
                    obs,
                    metric,
                    &zeta,
                    &mut hist_rng,
                    &mut out.setup_sim_calls,
                )?;
                h.append(&zeta, delta)?;
            }
            h
        }
    };

    let mut eps = schedule.first();
    let mut theta =
        find_initial_state(model, obs, metric, eps, &mut setup_rng, &mut out.setup_sim_calls)?;
    let mut proposal = GaussianProposal::from_prior(ProposalKind::Independent, prior, c)?;
    watch.lap();

    for t in 1..=cfg.iters {
        adaptor.maybe_refresh(t, &out.draws, q, &mut proposal, &mut eps)?;

        let zeta_star = proposal.propose(&theta, &mut chain_rng);
        // the history entry must be simulable, so the enrichment draw is
        // taken from the proposal truncated to the prior support
        let zeta_hist = {
            let mut draw = proposal.propose(&theta, &mut chain_rng);
            let mut tries = 1usize;
            while !prior.in_support(&draw) {
                if tries >= INIT_SEARCH_TRIES {
                    return Err(Error::Exhausted(
                        "history proposal never landed in the prior support".into(),
                    ));
                }
                draw = proposal.propose(&theta, &mut chain_rng);
                tries += 1;
            }
            draw
        };
        let delta_hist = simulate_discrepancy(
            model,
            obs,
            metric,
            &zeta_hist,
            &mut model_rng,
            &mut out.sim_calls,
        )?;
        history.append(&zeta_hist, delta_hist)?;

        let mut accepted = false;
        if prior.in_support(&zeta_star) {
            let h_star = history.h_hat(&zeta_star, eps, cfg.weights)?;
            let h_cur = history.h_hat(&theta, eps, cfg.weights)?;
            let log_num = prior.logpdf(&zeta_star)
                + math::ln(h_star)
                + proposal.log_density_at(&theta);
            let log_den =
                prior.logpdf(&theta) + math::ln(h_cur) + proposal.log_density_at(&zeta_star);
            accepted = mh_accept(log_num, log_den, &mut chain_rng);
        } else {
            out.skipped_proposals += 1;
        }
        out.proposals.extend_from_slice(&zeta_star);
        if accepted {
            theta = zeta_star;
        }
        out.draws.extend_from_slice(&theta);
        out.accepted.push(accepted);
        out.values.push(delta_hist);
        out.eps_used.push(eps);
        out.wall_ns.push(watch.lap());
    }
    out.cpu_seconds = watch.total_seconds();
    Ok((out, history))
}
