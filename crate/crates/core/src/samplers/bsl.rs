//! Synthetic-likelihood samplers: BSL-MCMC with fresh moment estimates
//! per proposal, and the history-recycling ABSL variant.

use super::*;
use crate::dist::Mvn;
use crate::history::BslHistory;

/// Simulate m pseudo-datasets at `theta` and return the flat m×p summary
/// block.
fn simulate_summary_block(
    model: &dyn Model,
    obs: &Observed,
    theta: &[f64],
    m: usize,
    rng: &mut RngStream,
    sim_calls: &mut u64,
) -> Result<Vec<f64>> {
    let p = model.summary_dim();
    let mut block = Vec::with_capacity(m * p);
    for _ in 0..m {
        let y = model.simulate(theta, obs.len(), rng)?;
        *sim_calls += 1;
        block.extend(model.summarize(&y, &obs.ctx)?);
    }
    Ok(block)
}

/// Log synthetic likelihood N(s₀; μ̂, Σ̂) from an m×p summary block, with
/// the unbiased covariance divisor m−1.
fn synthetic_loglik(s0: &[f64], block: &[f64], m: usize, p: usize) -> Result<f64> {
    let (mean, cov) = linalg::mean_cov(block, m, p);
    Ok(Mvn::new(mean, &cov)?.logpdf(s0))
}

/// BSL-MCMC: every proposal gets a fresh batch of m pseudo-datasets; the
/// current state's synthetic likelihood is retained. A proposal whose
/// covariance never factorizes is rejected and flagged.
#[allow(clippy::too_many_arguments)]
pub fn run_bsl(
    model: &dyn Model,
    obs: &Observed,
    kind: ProposalKind,
    cfg: &SamplerConfig,
    rng: &mut RngStream,
    clock: &dyn Clock,
) -> Result<ChainOutput> {
    cfg.validate()?;
    let q = model.param_dim();
    let p = model.summary_dim();
    let prior = model.prior();
    let c = cfg.scale_or(match kind {
        ProposalKind::RandomWalk => rw_default_c(q),
        ProposalKind::Independent => 1.5,
    });
    let adaptor = Adaptor::new(cfg.plan(), None, c, kind)?;

    let mut setup_rng = rng.substream(STREAM_SETUP);
    let mut chain_rng = rng.substream(STREAM_CHAIN);
    let mut model_rng = rng.substream(STREAM_MODEL);

    let mut out = ChainOutput::with_capacity(q, cfg.iters, cfg.burn_in);
    let mut watch = Stopwatch::new(clock);

    let mut theta = prior.sample(&mut setup_rng);
    let block = simulate_summary_block(
        model,
        obs,
        &theta,
        cfg.m,
        &mut setup_rng,
        &mut out.setup_sim_calls,
    )?;
    let mut log_h_cur = synthetic_loglik(&obs.s0, &block, cfg.m, p)?;
    let mut proposal = GaussianProposal::from_prior(kind, prior, c)?;
    let mut eps_unused = f64::NAN;
    watch.lap();

    for t in 1..=cfg.iters {
        adaptor.maybe_refresh(t, &out.draws, q, &mut proposal, &mut eps_unused)?;
        let zeta = proposal.propose(&theta, &mut chain_rng);
        let mut accepted = false;
        let mut value = f64::NAN;
        if prior.in_support(&zeta) {
            let block = simulate_summary_block(
                model,
                obs,
                &zeta,
                cfg.m,
                &mut model_rng,
                &mut out.sim_calls,
            )?;
            match synthetic_loglik(&obs.s0, &block, cfg.m, p) {
                Ok(log_h_star) => {
                    value = log_h_star;
                    let log_num =
                        prior.logpdf(&zeta) + log_h_star + proposal.log_q(&zeta, &theta);
                    let log_den =
                        prior.logpdf(&theta) + log_h_cur + proposal.log_q(&theta, &zeta);
                    if mh_accept(log_num, log_den, &mut chain_rng) {
                        accepted = true;
                        log_h_cur = log_h_star;
                    }
                }
                Err(Error::NotPositiveDefinite { .. }) => {
                    // reject the proposal, keep the chain alive
                    out.flagged += 1;
                }
                Err(e) => return Err(e),
            }
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
        out.eps_used.push(f64::NAN);
        out.wall_ns.push(watch.lap());
    }
    out.cpu_seconds = watch.total_seconds();
    Ok(out)
}

/// Accelerated BSL: per iteration one independent history draw ζ̃* gets
/// the m fresh pseudo-datasets; the acceptance moments at the proposal
/// and at the current state are kNN-weighted averages over the whole
/// history. Exactly m model simulations per iteration.
///
/// `warm_start` replaces the prior-simulated initial history (its size
/// overrides `cfg.n0`), allowing a run to resume from a snapshot.
#[allow(clippy::too_many_arguments)]
pub fn run_absl(
    model: &dyn Model,
    obs: &Observed,
    cfg: &SamplerConfig,
    warm_start: Option<BslHistory>,
    rng: &mut RngStream,
    clock: &dyn Clock,
) -> Result<(ChainOutput, BslHistory)> {
    cfg.validate()?;
    if cfg.n0 == 0 && warm_start.is_none() {
        return Err(Error::InvalidParam(
            "recycling sampler needs a nonempty initial history".into(),
        ));
    }
    let q = model.param_dim();
    let p = model.summary_dim();
    let prior = model.prior();
    let c = cfg.scale_or(1.5);
    let adaptor = Adaptor::new(cfg.plan(), None, c, ProposalKind::Independent)?;

    let mut setup_rng = rng.substream(STREAM_SETUP);
    let mut chain_rng = rng.substream(STREAM_CHAIN);
    let mut model_rng = rng.substream(STREAM_MODEL);
    let mut hist_rng = rng.substream(STREAM_HISTORY);

    let mut out = ChainOutput::with_capacity(q, cfg.iters, cfg.burn_in);
    let mut watch = Stopwatch::new(clock);

    let mut history = match warm_start {
        Some(h) => {
            if h.dim() != q || h.p() != p || h.m() != cfg.m || h.is_empty() {
                return Err(Error::InvalidParam(
                    "warm-start history does not match the model/configuration".into(),
                ));
            }
            h
        }
        None => {
            let mut h = BslHistory::new(q, p, cfg.m)?;
            for _ in 0..cfg.n0 {
                let zeta = prior.sample(&mut hist_rng);
                let block = simulate_summary_block(
                    model,
                    obs,
                    &zeta,
                    cfg.m,
                    &mut hist_rng,
                    &mut out.setup_sim_calls,
                )?;
                h.append(&zeta, &block)?;
            }
            h
        }
    };

    // initial state: the history entry with the highest estimated
    // synthetic likelihood anchors the chain where the moments are
    // informative (the algorithm leaves the choice open)
    let mut theta = {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for i in 0..history.len() {
            let (zeta, _, _) = history.entry_sums(i);
            let zeta = zeta.to_vec();
            let (mu, sigma) = history.moments_hat(&zeta, cfg.weights)?;
            if let Ok(mvn) = Mvn::new(mu, &sigma) {
                let logh = mvn.logpdf(&obs.s0) + prior.logpdf(&zeta);
                if best.as_ref().map_or(true, |(b, _)| logh > *b) {
                    best = Some((logh, zeta));
                }
            }
        }
        match best {
            Some((_, zeta)) => zeta,
            None => prior.sample(&mut setup_rng),
        }
    };
    let mut proposal = GaussianProposal::from_prior(ProposalKind::Independent, prior, c)?;
    let mut eps_unused = f64::NAN;
    watch.lap();

    for t in 1..=cfg.iters {
        adaptor.maybe_refresh(t, &out.draws, q, &mut proposal, &mut eps_unused)?;

        let zeta_star = proposal.propose(&theta, &mut chain_rng);
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
        let block = simulate_summary_block(
            model,
            obs,
            &zeta_hist,
            cfg.m,
            &mut model_rng,
            &mut out.sim_calls,
        )?;
        history.append(&zeta_hist, &block)?;

        let mut accepted = false;
        let mut value = f64::NAN;
        if prior.in_support(&zeta_star) {
            let log_h = |point: &[f64], hist: &BslHistory| -> Result<f64> {
                let (mu, sigma) = hist.moments_hat(point, cfg.weights)?;
                match Mvn::new(mu, &sigma) {
                    Ok(mvn) => Ok(mvn.logpdf(&obs.s0)),
                    Err(Error::NotPositiveDefinite { .. }) => Ok(f64::NAN),
                    Err(e) => Err(e),
                }
            };
            let log_h_star = log_h(&zeta_star, &history)?;
            let log_h_cur = log_h(&theta, &history)?;
            if log_h_star.is_nan() || log_h_cur.is_nan() {
                out.flagged += 1;
            } else {
                value = log_h_star;
                let log_num = prior.logpdf(&zeta_star)
                    + log_h_star
                    + proposal.log_density_at(&theta);
                let log_den =
                    prior.logpdf(&theta) + log_h_cur + proposal.log_density_at(&zeta_star);
                accepted = mh_accept(log_num, log_den, &mut chain_rng);
            }
        } else {
            out.skipped_proposals += 1;
        }
        out.proposals.extend_from_slice(&zeta_star);
        if accepted {
            theta = zeta_star;
        }
        out.draws.extend_from_slice(&theta);
        out.accepted.push(accepted);
        out.values.push(value);
        out.eps_used.push(f64::NAN);
        out.wall_ns.push(watch.lap());
    }
    out.cpu_seconds = watch.total_seconds();
    Ok((out, history))
}
