//! Multi-replicate comparison harness.
//!
//! For each replicate a fresh dataset is generated at the true
//! parameter, the discrepancy metric and tolerance ladder are calibrated
//! once for that dataset, every configured sampler is run, and the
//! reference chain (exact MA(2), particle MCMC, or the SMC set) supplies
//! the comparison draws. Cell seeds derive from
//! (master seed, model, sampler, replicate), so aggregation order cannot
//! change results and replicates can run on worker threads.

use crate::calibration::{self, CalibrationConfig, DiscrepancyMetric, EpsilonSchedule};
use crate::clock::Clock;
use crate::diagnostics::{compare_stats, SampleSet, StudyRow};
use crate::error::{Error, Result};
use crate::history::WeightScheme;
use crate::models::Model;
use crate::rng::{derive_seed, RngStream};
use crate::samplers::{
    run_aabc, run_abc_mcmc_m, run_abc_smc, run_absl, run_bsl, run_exact_ma2, run_pmcmc,
    ChainOutput, Observed, ProposalKind, SamplerConfig,
};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

/// How CPU figures enter the efficiency columns: measured wall time, or
/// the deterministic simulation-count proxy (1 µs per model call) that
/// keeps outputs byte-reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimingMode {
    Wall,
    SimCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplerName {
    Smc,
    AbcRw,
    AbcIs,
    AabcU,
    AabcL,
    BslRw,
    BslIs,
    AbslU,
    AbslL,
}

impl SamplerName {
    pub const ALL: [SamplerName; 9] = [
        SamplerName::Smc,
        SamplerName::AbcRw,
        SamplerName::AbcIs,
        SamplerName::AabcU,
        SamplerName::AabcL,
        SamplerName::BslRw,
        SamplerName::BslIs,
        SamplerName::AbslU,
        SamplerName::AbslL,
    ];

    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "smc" => SamplerName::Smc,
            "abc-rw" => SamplerName::AbcRw,
            "abc-is" => SamplerName::AbcIs,
            "aabc-u" => SamplerName::AabcU,
            "aabc-l" => SamplerName::AabcL,
            "bsl-rw" => SamplerName::BslRw,
            "bsl-is" => SamplerName::BslIs,
            "absl-u" => SamplerName::AbslU,
            "absl-l" => SamplerName::AbslL,
            _ => return None,
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SamplerName::Smc => "smc",
            SamplerName::AbcRw => "abc-rw",
            SamplerName::AbcIs => "abc-is",
            SamplerName::AabcU => "aabc-u",
            SamplerName::AabcL => "aabc-l",
            SamplerName::BslRw => "bsl-rw",
            SamplerName::BslIs => "bsl-is",
            SamplerName::AbslU => "absl-u",
            SamplerName::AbslL => "absl-l",
        }
    }

    /// Does the sampler consume the calibrated metric and ladder?
    pub fn needs_calibration(&self) -> bool {
        !matches!(
            self,
            SamplerName::BslRw | SamplerName::BslIs | SamplerName::AbslU | SamplerName::AbslL
        )
    }
}

#[derive(Debug, Clone)]
pub struct SamplerSpec {
    pub name: SamplerName,
    pub cfg: SamplerConfig,
}

/// Reference draws the approximate samplers are compared against.
#[derive(Debug, Clone)]
pub enum Baseline {
    ExactMa2(SamplerConfig),
    Pmcmc { particles: usize, cfg: SamplerConfig },
    /// Compare against the SMC particle set (models with no tractable
    /// reference).
    Smc,
}

impl Baseline {
    /// The benchmark default for a model.
    pub fn default_for(model: &dyn Model, desk: &SamplerConfig) -> Baseline {
        let cfg = SamplerConfig {
            iters: desk.iters.min(5000).max(desk.burn_in + 1),
            burn_in: desk.burn_in.min(2000),
            ..*desk
        };
        match model.name() {
            "ma2" => Baseline::ExactMa2(cfg),
            "ricker" | "svg" => Baseline::Pmcmc {
                particles: 100,
                cfg,
            },
            _ => Baseline::Smc,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub replicates: usize,
    /// Series length per dataset; 0 uses the model default.
    pub data_len: usize,
    pub truth: Vec<f64>,
    pub master_seed: u64,
    pub samplers: Vec<SamplerSpec>,
    pub baseline: Baseline,
    pub timing: TimingMode,
    pub calibration: CalibrationConfig,
    /// Pilot chain length for the tolerance ladder.
    pub pilot_burn_in: usize,
    /// Ladder steps J shared by every ABC sampler.
    pub j_steps: usize,
    pub smc_particles: usize,
    pub smc_move_cap: usize,
}

impl StudyConfig {
    pub fn validate(&self, model: &dyn Model) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::InvalidParam(
                "a study needs at least 2 replicates".into(),
            ));
        }
        if self.truth.len() != model.param_dim() {
            return Err(Error::Dimension {
                expected: model.param_dim(),
                got: self.truth.len(),
            });
        }
        if !model.prior().in_support(&self.truth) {
            return Err(Error::InvalidParam(
                "the true parameter must lie inside the prior support".into(),
            ));
        }
        for spec in &self.samplers {
            spec.cfg.validate()?;
        }
        Ok(())
    }

    fn n(&self, model: &dyn Model) -> usize {
        if self.data_len == 0 {
            model.default_len()
        } else {
            self.data_len
        }
    }
}

fn chain_sample(out: &ChainOutput, timing: TimingMode) -> SampleSet {
    let rows = out.iters() - out.burn_in;
    SampleSet {
        dim: out.dim,
        rows,
        draws: out.post_burn_draws().to_vec(),
        cpu_seconds: match timing {
            TimingMode::Wall => out.cpu_seconds,
            TimingMode::SimCount => out.pseudo_cpu_seconds(),
        },
        ess_override: None,
    }
}

/// Everything produced by one replicate.
pub struct ReplicateResult {
    pub baseline: SampleSet,
    /// One entry per configured sampler, in configuration order.
    pub per_sampler: Vec<core::result::Result<SampleSet, String>>,
}

/// Run one replicate: dataset, calibration, baseline, all samplers.
pub fn run_replicate(
    model: &dyn Model,
    cfg: &StudyConfig,
    replicate: usize,
    clock: &dyn Clock,
) -> Result<ReplicateResult> {
    let n = cfg.n(model);
    let mname = model.name();
    let mut data_rng = RngStream::new(
        derive_seed(cfg.master_seed, &[mname, "data"], replicate as u64),
        0,
    );
    let y0 = model.simulate(&cfg.truth, n, &mut data_rng)?;
    let obs = Observed::new(model, y0)?;

    let needs_cal = cfg.samplers.iter().any(|s| s.name.needs_calibration())
        || matches!(cfg.baseline, Baseline::Smc);
    let cal: Option<(DiscrepancyMetric, EpsilonSchedule)> = if needs_cal {
        let mut rng = RngStream::new(
            derive_seed(cfg.master_seed, &[mname, "calibrate"], replicate as u64),
            1,
        );
        let (metric, schedule, _) = calibration::calibrate(
            model,
            &obs.y,
            &obs.ctx,
            &cfg.calibration,
            cfg.pilot_burn_in,
            cfg.j_steps,
            &mut rng,
        )?;
        Some((metric, schedule))
    } else {
        None
    };

    let smc_run = |seed_tag: &str, clock: &dyn Clock| -> Result<SampleSet> {
        let (metric, schedule) = cal.as_ref().expect("calibration present");
        let mut rng = RngStream::new(
            derive_seed(cfg.master_seed, &[mname, seed_tag], replicate as u64),
            2,
        );
        let set = run_abc_smc(
            model,
            &obs,
            metric,
            schedule,
            cfg.smc_particles,
            cfg.smc_move_cap,
            &mut rng,
            clock,
        )?;
        Ok(SampleSet {
            dim: set.dim,
            rows: set.len(),
            draws: set.thetas.clone(),
            cpu_seconds: match cfg.timing {
                TimingMode::Wall => set.cpu_seconds,
                TimingMode::SimCount => set.sim_calls as f64 * 1e-6,
            },
            ess_override: Some(set.kish_ess()),
        })
    };

    let baseline = match &cfg.baseline {
        Baseline::ExactMa2(bcfg) => {
            let mut rng = RngStream::new(
                derive_seed(cfg.master_seed, &[mname, "exact"], replicate as u64),
                2,
            );
            let out = run_exact_ma2(&obs.y, bcfg, &mut rng, clock)?;
            chain_sample(&out, cfg.timing)
        }
        Baseline::Pmcmc { particles, cfg: bcfg } => {
            let mut rng = RngStream::new(
                derive_seed(cfg.master_seed, &[mname, "exact"], replicate as u64),
                2,
            );
            let out = run_pmcmc(model, &obs.y, *particles, bcfg, &mut rng, clock)?;
            chain_sample(&out, cfg.timing)
        }
        Baseline::Smc => smc_run("exact-smc", clock)?,
    };

    let mut per_sampler = Vec::with_capacity(cfg.samplers.len());
    for spec in &cfg.samplers {
        let tag = spec.name.as_str();
        let mut rng = RngStream::new(
            derive_seed(cfg.master_seed, &[mname, tag], replicate as u64),
            2,
        );
        let result: core::result::Result<SampleSet, String> = (|| {
            let sample = match spec.name {
                SamplerName::Smc => smc_run(tag, clock).map_err(|e| e.to_string())?,
                SamplerName::AbcRw | SamplerName::AbcIs => {
                    let (metric, schedule) = cal.as_ref().expect("calibration present");
                    let kind = if spec.name == SamplerName::AbcRw {
                        ProposalKind::RandomWalk
                    } else {
                        ProposalKind::Independent
                    };
                    let out = run_abc_mcmc_m(
                        model, &obs, metric, schedule, kind, &spec.cfg, &mut rng, clock,
                    )
                    .map_err(|e| e.to_string())?;
                    chain_sample(&out, cfg.timing)
                }
                SamplerName::AabcU | SamplerName::AabcL => {
                    let (metric, schedule) = cal.as_ref().expect("calibration present");
                    let mut scfg = spec.cfg;
                    scfg.weights = if spec.name == SamplerName::AabcU {
                        WeightScheme::Uniform
                    } else {
                        WeightScheme::Linear
                    };
                    let (out, _) =
                        run_aabc(model, &obs, metric, schedule, &scfg, None, &mut rng, clock)
                            .map_err(|e| e.to_string())?;
                    chain_sample(&out, cfg.timing)
                }
                SamplerName::BslRw | SamplerName::BslIs => {
                    let kind = if spec.name == SamplerName::BslRw {
                        ProposalKind::RandomWalk
                    } else {
                        ProposalKind::Independent
                    };
                    let out = run_bsl(model, &obs, kind, &spec.cfg, &mut rng, clock)
                        .map_err(|e| e.to_string())?;
                    chain_sample(&out, cfg.timing)
                }
                SamplerName::AbslU | SamplerName::AbslL => {
                    let mut scfg = spec.cfg;
                    scfg.weights = if spec.name == SamplerName::AbslU {
                        WeightScheme::Uniform
                    } else {
                        WeightScheme::Linear
                    };
                    let (out, _) = run_absl(model, &obs, &scfg, None, &mut rng, clock)
                        .map_err(|e| e.to_string())?;
                    chain_sample(&out, cfg.timing)
                }
            };
            Ok(sample)
        })();
        per_sampler.push(result);
    }

    Ok(ReplicateResult {
        baseline,
        per_sampler,
    })
}

/// Aggregate per-replicate cells into the study table (one row per
/// sampler, configuration order). A sampler with any failed replicate
/// gets a flagged row; the rest of the study is unaffected.
pub fn aggregate(
    cfg: &StudyConfig,
    replicates: &[ReplicateResult],
) -> Vec<StudyRow> {
    let baseline: Vec<SampleSet> = replicates.iter().map(|r| r.baseline.clone()).collect();
    cfg.samplers
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let mut sets = Vec::with_capacity(replicates.len());
            let mut failure: Option<String> = None;
            for rep in replicates {
                match &rep.per_sampler[i] {
                    Ok(s) => sets.push(s.clone()),
                    Err(e) => {
                        failure = Some(e.clone());
                        break;
                    }
                }
            }
            let outcome = match failure {
                Some(e) => Err(e),
                None => compare_stats(&sets, &baseline, &cfg.truth).map_err(|e| e.to_string()),
            };
            StudyRow {
                sampler: spec.name.as_str().to_string(),
                outcome,
            }
        })
        .collect()
}

/// Sequential replicate study.
pub fn replicate_study(
    model: &dyn Model,
    cfg: &StudyConfig,
    clock: &dyn Clock,
) -> Result<Vec<StudyRow>> {
    cfg.validate(model)?;
    let mut reps = Vec::with_capacity(cfg.replicates);
    for r in 0..cfg.replicates {
        reps.push(run_replicate(model, cfg, r, clock)?);
    }
    Ok(aggregate(cfg, &reps))
}
