//! Subcommand implementations.

use crate::config::ExperimentConfig;
use crate::io::{self, RunManifest};
use crate::wallclock::WallClock;
use crate::CliError;
use lfi_core::calibration::{self, DiscrepancyMetric, EpsilonSchedule};
use lfi_core::diagnostics::act_ess;
use lfi_core::models::Model;
use lfi_core::rng::{derive_seed, RngStream};
use lfi_core::samplers::{
    run_aabc, run_abc_mcmc_m, run_abc_smc, run_absl, run_bsl, run_exact_ma2, run_pmcmc,
    ChainOutput, Observed, ProposalKind, SamplerConfig,
};
use lfi_core::study::{self, SamplerName, StudyConfig, TimingMode};
use std::path::{Path, PathBuf};

/// The observed dataset for a config: loaded from `dataset` or generated
/// at `truth` with the data substream of the master seed.
fn resolve_data(cfg: &ExperimentConfig, model: &dyn Model) -> Result<Vec<f64>, CliError> {
    if let Some(path) = &cfg.dataset {
        return io::read_dataset_csv(Path::new(path));
    }
    let truth = cfg.truth.as_ref().expect("validated");
    let n = if cfg.data_len == 0 {
        model.default_len()
    } else {
        cfg.data_len
    };
    let mut rng = RngStream::new(derive_seed(cfg.seed, &[model.name(), "data"], 0), 0);
    model
        .simulate(truth, n, &mut rng)
        .map_err(|e| CliError::Runtime(e.to_string()))
}

fn dataset_bytes(y: &[f64]) -> Vec<u8> {
    let mut s = String::from("y\n");
    for v in y {
        s.push_str(&format!("{v}\n"));
    }
    s.into_bytes()
}

pub fn cmd_calibrate(cfg: &ExperimentConfig) -> Result<(), CliError> {
    cfg.validate()?;
    let model = cfg.model()?;
    let y0 = resolve_data(cfg, model)?;
    let ctx = model.make_ref_ctx(&y0);
    let out_dir = PathBuf::from(&cfg.out_dir);

    let mut rng = RngStream::new(derive_seed(cfg.seed, &[model.name(), "calibrate"], 0), 1);
    let (metric, schedule, sims) = calibration::calibrate(
        model,
        &y0,
        &ctx,
        &cfg.calibration_config(),
        cfg.pilot_burn_in,
        cfg.j_steps,
        &mut rng,
    )
    .map_err(|e| CliError::Runtime(e.to_string()))?;

    io::write_dataset_csv(&out_dir.join("dataset.csv"), &y0)?;
    io::write_summary_csv(&out_dir.join("summary.csv"), &metric.s0)?;
    io::write_metric_json(&out_dir.join("metric.json"), &metric)?;
    io::write_schedule_json(&out_dir.join("schedule.json"), &schedule)?;
    println!(
        "calibrated {} (p = {}): eps0 = {:.6e}, eps{} = {:.6e} ({} simulations)",
        model.name(),
        metric.p,
        schedule.first(),
        schedule.j_steps(),
        schedule.last(),
        sims
    );
    Ok(())
}

fn load_calibration(
    out_dir: &Path,
    model: &dyn Model,
) -> Result<(DiscrepancyMetric, EpsilonSchedule), CliError> {
    let metric_path = out_dir.join("metric.json");
    let schedule_path = out_dir.join("schedule.json");
    if !metric_path.exists() || !schedule_path.exists() {
        return Err(CliError::Usage(format!(
            "no calibration artifacts in {}; run `lfi calibrate` first",
            out_dir.display()
        )));
    }
    let metric = io::read_metric_json(&metric_path)?;
    if metric.p != model.summary_dim() {
        return Err(CliError::Usage(format!(
            "metric dimension {} does not match model '{}' (p = {})",
            metric.p,
            model.name(),
            model.summary_dim()
        )));
    }
    Ok((metric, io::read_schedule_json(&schedule_path)?))
}

pub struct RunFlags {
    pub wall_time: bool,
    pub save_history: bool,
    pub history: Option<PathBuf>,
    pub kde: bool,
}

pub fn cmd_run(cfg: &ExperimentConfig, sampler: &str, flags: &RunFlags) -> Result<(), CliError> {
    cfg.validate()?;
    let model = cfg.model()?;
    let out_dir = PathBuf::from(&cfg.out_dir);
    let y0 = resolve_data(cfg, model)?;
    let obs = Observed::new(model, y0.clone()).map_err(|e| CliError::Runtime(e.to_string()))?;
    let clock = WallClock::new();
    let mut rng = RngStream::new(derive_seed(cfg.seed, &[model.name(), sampler], 0), 2);

    let config_hash = io::fnv64_hex(
        serde_json::to_string(cfg)
            .map_err(io::runtime)?
            .as_bytes(),
    );
    let dataset_hash = io::fnv64_hex(&dataset_bytes(&y0));

    // SMC produces a particle set rather than a chain
    if sampler == "smc" {
        let (metric, schedule) = load_calibration(&out_dir, model)?;
        let set = run_abc_smc(
            model,
            &obs,
            &metric,
            &schedule,
            cfg.smc.particles,
            cfg.smc.move_cap,
            &mut rng,
            &clock,
        )
        .map_err(|e| CliError::Runtime(e.to_string()))?;
        io::write_particles_csv(&out_dir.join("smc_particles.csv"), &set)?;
        let cpu = if flags.wall_time {
            set.cpu_seconds
        } else {
            set.sim_calls as f64 * 1e-6
        };
        let ess = set.kish_ess();
        println!(
            "smc: {} particles, mean = {:?}, ESS = {:.1}, ESS/CPU = {:.3} ({} simulations)",
            set.len(),
            set.mean(),
            ess,
            ess / cpu,
            set.sim_calls
        );
        return Ok(());
    }

    let run_chain = |rng: &mut RngStream| -> Result<ChainOutput, CliError> {
        let rt = |e: lfi_core::Error| CliError::Runtime(e.to_string());
        match sampler {
            "exact" => {
                if model.name() != "ma2" {
                    return Err(CliError::Usage(
                        "the exact chain is only available for model 'ma2'".into(),
                    ));
                }
                let spec = SamplerConfig {
                    iters: cfg.exact.iters,
                    burn_in: cfg.exact.burn_in,
                    j_steps: cfg.exact.j_steps,
                    ..SamplerConfig::default()
                };
                run_exact_ma2(&obs.y, &spec, rng, &clock).map_err(rt)
            }
            "pmcmc" => {
                let spec = SamplerConfig {
                    iters: cfg.exact.iters,
                    burn_in: cfg.exact.burn_in,
                    j_steps: cfg.exact.j_steps,
                    ..SamplerConfig::default()
                };
                run_pmcmc(model, &obs.y, cfg.pmcmc_particles, &spec, rng, &clock).map_err(rt)
            }
            name => {
                let spec = cfg.sampler_spec(name)?;
                match spec.name {
                    SamplerName::AbcRw | SamplerName::AbcIs => {
                        let (metric, schedule) = load_calibration(&out_dir, model)?;
                        let kind = if spec.name == SamplerName::AbcRw {
                            ProposalKind::RandomWalk
                        } else {
                            ProposalKind::Independent
                        };
                        run_abc_mcmc_m(
                            model, &obs, &metric, &schedule, kind, &spec.cfg, rng, &clock,
                        )
                        .map_err(rt)
                    }
                    SamplerName::AabcU | SamplerName::AabcL => {
                        let (metric, schedule) = load_calibration(&out_dir, model)?;
                        let mut scfg = spec.cfg;
                        scfg.weights = if spec.name == SamplerName::AabcU {
                            lfi_core::history::WeightScheme::Uniform
                        } else {
                            lfi_core::history::WeightScheme::Linear
                        };
                        let warm = flags
                            .history
                            .as_ref()
                            .map(|p| io::read_abc_history_csv(p, model.param_dim()))
                            .transpose()?;
                        let (out, history) =
                            run_aabc(model, &obs, &metric, &schedule, &scfg, warm, rng, &clock)
                                .map_err(rt)?;
                        if flags.save_history {
                            io::write_abc_history_csv(
                                &out_dir.join(format!("{sampler}_history.csv")),
                                &history,
                            )?;
                        }
                        Ok(out)
                    }
                    SamplerName::BslRw | SamplerName::BslIs => {
                        let kind = if spec.name == SamplerName::BslRw {
                            ProposalKind::RandomWalk
                        } else {
                            ProposalKind::Independent
                        };
                        run_bsl(model, &obs, kind, &spec.cfg, rng, &clock).map_err(rt)
                    }
                    SamplerName::AbslU | SamplerName::AbslL => {
                        let mut scfg = spec.cfg;
                        scfg.weights = if spec.name == SamplerName::AbslU {
                            lfi_core::history::WeightScheme::Uniform
                        } else {
                            lfi_core::history::WeightScheme::Linear
                        };
                        let warm = flags
                            .history
                            .as_ref()
                            .map(|p| {
                                io::read_bsl_history_csv(
                                    p,
                                    model.param_dim(),
                                    model.summary_dim(),
                                )
                            })
                            .transpose()?;
                        let (out, history) =
                            run_absl(model, &obs, &scfg, warm, rng, &clock).map_err(rt)?;
                        if flags.save_history {
                            io::write_bsl_history_csv(
                                &out_dir.join(format!("{sampler}_history.csv")),
                                &history,
                            )?;
                        }
                        Ok(out)
                    }
                    SamplerName::Smc => unreachable!("handled above"),
                }
            }
        }
    };

    let out = run_chain(&mut rng)?;
    io::write_chain_csv(&out_dir.join(format!("{sampler}_chain.csv")), &out)?;
    if flags.kde {
        for s in 0..out.dim {
            let curve = lfi_core::diagnostics::kde(&out.post_burn_component(s), 512)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            io::write_kde_csv(&out_dir.join(format!("{sampler}_kde_theta_{s}.csv")), &curve)?;
        }
    }
    let spec_cfg = match sampler {
        "exact" | "pmcmc" => SamplerConfig {
            iters: cfg.exact.iters,
            burn_in: cfg.exact.burn_in,
            j_steps: cfg.exact.j_steps,
            ..SamplerConfig::default()
        },
        name => cfg.sampler_spec(name)?.cfg,
    };
    let manifest = RunManifest {
        format_version: 1,
        command: "run".into(),
        model: model.name().into(),
        sampler: sampler.into(),
        seed: cfg.seed,
        data_len: obs.len(),
        iters: out.iters(),
        burn_in: out.burn_in,
        m: spec_cfg.m,
        n0: spec_cfg.n0,
        acceptance_rate: out.acceptance_rate(),
        posterior_mean: out.posterior_mean(),
        sim_calls: out.sim_calls,
        setup_sim_calls: out.setup_sim_calls,
        skipped_proposals: out.skipped_proposals,
        flagged: out.flagged,
        config_hash,
        dataset_hash,
    };
    io::write_manifest(&out_dir.join(format!("{sampler}_manifest.json")), &manifest)?;

    // printed summary; ESS/CPU is deterministic unless wall time was asked for
    let cpu = if flags.wall_time {
        out.cpu_seconds
    } else {
        out.pseudo_cpu_seconds()
    };
    let mut ess_mean = 0.0;
    for s in 0..out.dim {
        ess_mean += act_ess(&out.post_burn_component(s), cpu)
            .map(|d| d.ess)
            .unwrap_or(0.0);
    }
    ess_mean /= out.dim as f64;
    println!(
        "{sampler} on {}: mean = {:?}, acceptance = {:.3}, ESS = {:.1}, ESS/CPU = {:.3} \
         ({} chain + {} setup simulations)",
        model.name(),
        out.posterior_mean(),
        out.acceptance_rate(),
        ess_mean,
        ess_mean / cpu,
        out.sim_calls,
        out.setup_sim_calls,
    );
    Ok(())
}

pub fn cmd_replicate(
    cfg: &ExperimentConfig,
    threads: usize,
    wall_time: bool,
) -> Result<(), CliError> {
    cfg.validate()?;
    let model = cfg.model()?;
    if cfg.dataset.is_some() {
        return Err(CliError::Usage(
            "replicate studies generate data at 'truth'; remove 'dataset'".into(),
        ));
    }
    let study_cfg = StudyConfig {
        replicates: cfg.replicates,
        data_len: cfg.data_len,
        truth: cfg.truth.clone().expect("validated"),
        master_seed: cfg.seed,
        samplers: cfg.study_samplers()?,
        baseline: cfg.baseline(model)?,
        timing: if wall_time {
            TimingMode::Wall
        } else {
            TimingMode::SimCount
        },
        calibration: cfg.calibration_config(),
        pilot_burn_in: cfg.pilot_burn_in,
        j_steps: cfg.j_steps,
        smc_particles: cfg.smc.particles,
        smc_move_cap: cfg.smc.move_cap,
    };
    study_cfg
        .validate(model)
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let clock = WallClock::new();
    let workers = threads.max(1).min(study_cfg.replicates);
    let reps: Vec<study::ReplicateResult> = if workers <= 1 {
        let mut acc = Vec::with_capacity(study_cfg.replicates);
        for r in 0..study_cfg.replicates {
            acc.push(
                study::run_replicate(model, &study_cfg, r, &clock)
                    .map_err(|e| CliError::Runtime(format!("replicate {r}: {e}")))?,
            );
        }
        acc
    } else {
        run_replicates_parallel(model, &study_cfg, workers, &clock)?
    };

    let rows = study::aggregate(&study_cfg, &reps);
    for row in &rows {
        if let Err(e) = &row.outcome {
            eprintln!("warning: sampler '{}' flagged: {e}", row.sampler);
        }
    }
    let out_dir = PathBuf::from(&cfg.out_dir);
    let path = out_dir.join(format!("study_{}.csv", model.name()));
    io::write_study_csv(&path, &rows)?;
    io::write_study_manifest(
        &out_dir.join(format!("study_{}_manifest.json", model.name())),
        cfg,
        wall_time,
    )?;
    print!("{}", io::study_csv(&rows));
    println!("study table written to {}", path.display());
    Ok(())
}

/// Replicates are independent cells; workers pull indices off a shared
/// counter and results merge in index order.
fn run_replicates_parallel(
    model: &'static dyn Model,
    cfg: &StudyConfig,
    workers: usize,
    clock: &WallClock,
) -> Result<Vec<study::ReplicateResult>, CliError> {
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<study::ReplicateResult, String>>>> =
        Mutex::new((0..cfg.replicates).map(|_| None).collect());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let r = next.fetch_add(1, Ordering::Relaxed);
                if r >= cfg.replicates {
                    break;
                }
                let res =
                    study::run_replicate(model, cfg, r, clock).map_err(|e| e.to_string());
                results.lock().unwrap()[r] = Some(res);
            });
        }
    });

    let collected = results.into_inner().unwrap();
    let mut out = Vec::with_capacity(cfg.replicates);
    for (r, slot) in collected.into_iter().enumerate() {
        match slot {
            Some(Ok(v)) => out.push(v),
            Some(Err(e)) => return Err(CliError::Runtime(format!("replicate {r}: {e}"))),
            None => return Err(CliError::Runtime(format!("replicate {r} never ran"))),
        }
    }
    Ok(out)
}

pub fn cmd_ingest_returns(prices: &Path, out: &Path) -> Result<(), CliError> {
    let series = io::ingest_returns(prices)?;
    io::write_returns_csv(out, &series)?;
    let mean: f64 = series.values.iter().sum::<f64>() / series.values.len() as f64;
    println!(
        "{} returns written to {} (mean {:.3e} after centering, scale x200)",
        series.values.len(),
        out.display(),
        mean
    );
    Ok(())
}

pub fn cmd_defaults() -> Result<(), CliError> {
    let cfg = ExperimentConfig::default();
    println!(
        "{}",
        serde_json::to_string_pretty(&cfg).map_err(io::runtime)?
    );
    Ok(())
}
