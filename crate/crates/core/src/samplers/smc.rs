//! Sequential Monte Carlo for ABC: accept/reject initialisation at the
//! widest tolerance, then per level reweight by the shrunken indicator,
//! resample systematically, and rejuvenate each particle with an
//! ABC-MCMC move (repeated until acceptance or a move cap).

use super::*;
use crate::calibration::DiscrepancyMetric;

#[derive(Debug, Clone)]
pub struct ParticleSet {
    pub dim: usize,
    pub thetas: Vec<f64>,
    pub weights: Vec<f64>,
    pub deltas: Vec<f64>,
    pub sim_calls: u64,
    pub cpu_seconds: f64,
    /// Fraction of particles that accepted a rejuvenation move at the
    /// final level.
    pub final_move_rate: f64,
}

impl ParticleSet {
    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn theta(&self, i: usize) -> &[f64] {
        &self.thetas[i * self.dim..(i + 1) * self.dim]
    }

    pub fn component(&self, s: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.theta(i)[s]).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        let wsum: f64 = self.weights.iter().sum();
        let mut mean = alloc::vec![0.0; self.dim];
        for i in 0..self.len() {
            for d in 0..self.dim {
                mean[d] += self.weights[i] * self.theta(i)[d];
            }
        }
        for v in &mut mean {
            *v /= wsum;
        }
        mean
    }

    /// Kish effective sample size (Σw)²/Σw².
    pub fn kish_ess(&self) -> f64 {
        let sum: f64 = self.weights.iter().sum();
        let sumsq: f64 = self.weights.iter().map(|w| w * w).sum();
        sum * sum / sumsq
    }
}

/// Systematic resampling of `n` indices proportional to `weights`.
pub(crate) fn systematic_resample(
    weights: &[f64],
    n: usize,
    rng: &mut RngStream,
) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    debug_assert!(total > 0.0);
    let step = total / n as f64;
    let mut u = rng.next_f64() * step;
    let mut idx = Vec::with_capacity(n);
    let mut cum = 0.0;
    let mut i = 0usize;
    for _ in 0..n {
        while cum + weights[i] < u {
            cum += weights[i];
            i += 1;
        }
        idx.push(i);
        u += step;
    }
    idx
}

#[allow(clippy::too_many_arguments)]
pub fn run_abc_smc(
    model: &dyn Model,
    obs: &Observed,
    metric: &DiscrepancyMetric,
    schedule: &EpsilonSchedule,
    n_particles: usize,
    move_cap: usize,
    rng: &mut RngStream,
    clock: &dyn Clock,
) -> Result<ParticleSet> {
    if n_particles == 0 || move_cap == 0 {
        return Err(Error::InvalidParam(
            "SMC needs particles and a positive move cap".into(),
        ));
    }
    let watch = Stopwatch::new(clock);
    let q = model.param_dim();
    let prior = model.prior();
    let mut chain_rng = rng.substream(STREAM_CHAIN);
    let mut model_rng = rng.substream(STREAM_MODEL);

    // level 0: accept/reject at the widest tolerance
    let eps0 = schedule.first();
    let mut sim_calls = 0u64;
    let mut thetas = Vec::with_capacity(n_particles * q);
    let mut deltas = Vec::with_capacity(n_particles);
    while deltas.len() < n_particles {
        if sim_calls >= 50_000_000 {
            return Err(Error::Exhausted(format!(
                "accept/reject initialisation at tolerance {eps0} exceeded the budget"
            )));
        }
        let theta = prior.sample(&mut chain_rng);
        let delta =
            simulate_discrepancy(model, obs, metric, &theta, &mut model_rng, &mut sim_calls)?;
        if delta < eps0 {
            thetas.extend_from_slice(&theta);
            deltas.push(delta);
        }
    }

    let mut final_move_rate = 1.0;
    for (level, &eps) in schedule.levels().iter().enumerate().skip(1) {
        // reweight by the shrunken indicator
        let weights: Vec<f64> = deltas
            .iter()
            .map(|&d| if d < eps { 1.0 } else { 0.0 })
            .collect();
        if weights.iter().sum::<f64>() == 0.0 {
            return Err(Error::Degenerate(format!(
                "no particle survives level {level} at tolerance {eps}: \
                 min discrepancy {:.6e}",
                deltas.iter().cloned().fold(f64::INFINITY, f64::min)
            )));
        }
        let picks = systematic_resample(&weights, n_particles, &mut chain_rng);
        let mut new_thetas = Vec::with_capacity(n_particles * q);
        let mut new_deltas = Vec::with_capacity(n_particles);
        for &i in &picks {
            new_thetas.extend_from_slice(&thetas[i * q..(i + 1) * q]);
            new_deltas.push(deltas[i]);
        }
        thetas = new_thetas;
        deltas = new_deltas;

        // rejuvenation kernel: random walk scaled to the particle cloud
        let (mean, cov) = linalg::mean_cov(&thetas, n_particles, q);
        let proposal =
            GaussianProposal::from_moments(ProposalKind::RandomWalk, mean, &cov, rw_default_c(q))?;

        let mut moved = 0usize;
        for i in 0..n_particles {
            let current = thetas[i * q..(i + 1) * q].to_vec();
            for _ in 0..move_cap {
                let zeta = proposal.propose(&current, &mut chain_rng);
                if !prior.in_support(&zeta) {
                    continue;
                }
                let delta = simulate_discrepancy(
                    model,
                    obs,
                    metric,
                    &zeta,
                    &mut model_rng,
                    &mut sim_calls,
                )?;
                if delta < eps
                    && mh_accept(
                        prior.logpdf(&zeta),
                        prior.logpdf(&current),
                        &mut chain_rng,
                    )
                {
                    thetas[i * q..(i + 1) * q].copy_from_slice(&zeta);
                    deltas[i] = delta;
                    moved += 1;
                    break;
                }
            }
        }
        final_move_rate = moved as f64 / n_particles as f64;
        if moved == 0 {
            return Err(Error::Degenerate(format!(
                "every rejuvenation move failed at level {level} (tolerance {eps})"
            )));
        }
    }

    Ok(ParticleSet {
        dim: q,
        thetas,
        weights: alloc::vec![1.0; n_particles],
        deltas,
        sim_calls,
        cpu_seconds: watch.total_seconds(),
        final_move_rate,
    })
}
