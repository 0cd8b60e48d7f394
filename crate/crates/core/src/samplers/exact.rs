//! Reference chains: exact MA(2) Metropolis-Hastings and pseudo-marginal
//! particle MCMC built on a bootstrap particle filter.

use super::*;
use crate::models::{ma2_exact_loglik, Hmm};
use crate::samplers::smc::systematic_resample;

/// Random-walk MH with a cached target value: the log-target at the
/// current state is evaluated once and reused until a move is accepted.
/// The exact chain plugs in a deterministic likelihood; PMCMC plugs in
/// the particle-filter estimator, and retaining the cached estimate is
/// precisely the pseudo-marginal construction.
#[allow(clippy::too_many_arguments)]
fn run_cached_target_mh(
    prior: &Prior,
    mut log_target: impl FnMut(&[f64], &mut RngStream) -> Result<f64>,
    init: Vec<f64>,
    init_value: f64,
    cfg: &SamplerConfig,
    rng: &mut RngStream,
    clock: &dyn Clock,
) -> Result<ChainOutput> {
    cfg.validate()?;
    let q = prior.dim();
    let c = cfg.scale_or(rw_default_c(q));
    let adaptor = Adaptor::new(cfg.plan(), None, c, ProposalKind::RandomWalk)?;
    let mut chain_rng = rng.substream(STREAM_CHAIN);
    let mut model_rng = rng.substream(STREAM_MODEL);

    let mut out = ChainOutput::with_capacity(q, cfg.iters, cfg.burn_in);
    let mut watch = Stopwatch::new(clock);
    let mut theta = init;
    let mut log_cur = init_value;
    let mut proposal = GaussianProposal::from_prior(ProposalKind::RandomWalk, prior, c)?;
    let mut eps_unused = f64::NAN;
    watch.lap();

    for t in 1..=cfg.iters {
        adaptor.maybe_refresh(t, &out.draws, q, &mut proposal, &mut eps_unused)?;
        let zeta = proposal.propose(&theta, &mut chain_rng);
        let mut accepted = false;
        let mut value = f64::NAN;
        if prior.in_support(&zeta) {
            let log_star = log_target(&zeta, &mut model_rng)?;
            value = log_star;
            // random-walk kernel: the q-ratio cancels
            let log_num = prior.logpdf(&zeta) + log_star;
            let log_den = prior.logpdf(&theta) + log_cur;
            if mh_accept(log_num, log_den, &mut chain_rng) {
                accepted = true;
                log_cur = log_star;
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

/// Exact-likelihood MA(2) chain.
pub fn run_exact_ma2(
    y0: &[f64],
    cfg: &SamplerConfig,
    rng: &mut RngStream,
    clock: &dyn Clock,
) -> Result<ChainOutput> {
    let prior = crate::models::MA2.prior();
    let mut setup_rng = rng.substream(STREAM_SETUP);
    let theta0 = prior.sample(&mut setup_rng);
    let v0 = ma2_exact_loglik(&theta0, y0)?;
    run_cached_target_mh(
        prior,
        |theta, _| ma2_exact_loglik(theta, y0),
        theta0,
        v0,
        cfg,
        rng,
        clock,
    )
}

/// Bootstrap particle filter estimate of the log-likelihood: propagate
/// `particles` states through the transition, weight by the emission
/// density, resample systematically, and accumulate log mean weights.
/// Returns −∞ as soon as every weight underflows.
pub fn bootstrap_pf_loglik(
    hmm: &dyn Hmm,
    theta: &[f64],
    y: &[f64],
    particles: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    if particles == 0 {
        return Err(Error::InvalidParam("need at least one particle".into()));
    }
    if y.is_empty() {
        return Err(Error::Data("empty observation series".into()));
    }
    let p = particles;
    let mut xs: Vec<f64> = (0..p).map(|_| hmm.init_sample(theta, rng)).collect();
    let mut logw = alloc::vec![0.0; p];
    let mut loglik = 0.0;
    let mut weights = alloc::vec![0.0; p];
    for (t, &obs) in y.iter().enumerate() {
        if t > 0 {
            for x in &mut xs {
                *x = hmm.transition_sample(*x, theta, rng);
            }
        }
        for i in 0..p {
            logw[i] = hmm.emission_logpdf(obs, xs[i], theta)?;
        }
        let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        let mut sum = 0.0;
        for i in 0..p {
            weights[i] = math::exp(logw[i] - max);
            sum += weights[i];
        }
        loglik += max + math::ln(sum / p as f64);
        let picks = systematic_resample(&weights, p, rng);
        let old = xs.clone();
        for (i, &pick) in picks.iter().enumerate() {
            xs[i] = old[pick];
        }
    }
    Ok(loglik)
}

/// Particle MCMC: random-walk MH where the likelihood in the ratio is
/// the particle-filter estimate, re-drawn only at proposals.
#[allow(clippy::too_many_arguments)]
pub fn run_pmcmc(
    model: &dyn Model,
    y0: &[f64],
    particles: usize,
    cfg: &SamplerConfig,
    rng: &mut RngStream,
    clock: &dyn Clock,
) -> Result<ChainOutput> {
    let hmm = model.hmm().ok_or_else(|| {
        Error::InvalidParam(format!(
            "model {} exposes no transition/emission densities",
            model.name()
        ))
    })?;
    let prior = model.prior();
    let mut setup_rng = rng.substream(STREAM_SETUP);
    // initial state must have a finite likelihood estimate
    let mut init = None;
    for _ in 0..100 {
        let theta = prior.sample(&mut setup_rng);
        let v = bootstrap_pf_loglik(hmm, &theta, y0, particles, &mut setup_rng)?;
        if v.is_finite() {
            init = Some((theta, v));
            break;
        }
    }
    let (theta0, v0) = init.ok_or_else(|| {
        Error::Exhausted("no prior draw with a finite particle-filter likelihood".into())
    })?;
    run_cached_target_mh(
        prior,
        |theta, model_rng| bootstrap_pf_loglik(hmm, theta, y0, particles, model_rng),
        theta0,
        v0,
        cfg,
        rng,
        clock,
    )
}
