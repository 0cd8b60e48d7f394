//! `lfi` — likelihood-free inference from the command line: calibrate
//! discrepancy metrics, run ABC/BSL chains and their recycling variants,
//! reproduce multi-replicate comparison tables, and ingest financial
//! return series.

mod commands;
mod config;
mod io;
mod wallclock;

use clap::{Parser, Subcommand};
use config::ExperimentConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    /// Bad usage or configuration: exit code 2, nothing computed.
    Usage(String),
    /// Failure during a run: exit code 1.
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "lfi",
    version,
    about = "Likelihood-free Bayesian inference: ABC and synthetic-likelihood samplers \
             accelerated by simulation recycling"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Experiment configuration JSON (defaults apply when omitted).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Benchmark model: ma2, ricker, svg, svs, toy.
    #[arg(long)]
    model: Option<String>,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Estimate the discrepancy metric and tolerance schedule for a dataset.
    Calibrate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run a single sampler and write its chain and manifest.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// smc, abc-rw, abc-is, aabc-u, aabc-l, bsl-rw, bsl-is, absl-u,
        /// absl-l, exact, pmcmc.
        #[arg(long)]
        sampler: String,
        /// Report measured wall-clock ESS/CPU instead of the
        /// deterministic simulation-count proxy.
        #[arg(long)]
        wall_time: bool,
        /// Write the recycling sampler's final history snapshot.
        #[arg(long)]
        save_history: bool,
        /// Warm-start the recycling sampler from a history snapshot.
        #[arg(long)]
        history: Option<PathBuf>,
        /// Export per-component posterior density curves (x,density CSV).
        #[arg(long)]
        kde: bool,
    },
    /// Run the multi-replicate comparison study and emit its table.
    Replicate {
        #[command(flatten)]
        common: CommonArgs,
        /// Worker threads for replicate cells (1 keeps wall-clock
        /// figures comparable across samplers).
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        wall_time: bool,
    },
    /// Turn a date,close price CSV into centered, scaled log returns.
    IngestReturns {
        /// Input price CSV with columns date,close.
        #[arg(long)]
        prices: PathBuf,
        /// Output returns CSV (date,y).
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the full default configuration.
    Defaults,
}

fn load_config(common: &CommonArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg: ExperimentConfig = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("invalid config: {e}")))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(model) = &common.model {
        if cfg.model != *model {
            cfg.model = model.clone();
            // model-specific defaults follow the new model
            if common.config.is_none() {
                cfg.truth = lfi_core::models::benchmark_truth(model);
            }
        }
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.display().to_string();
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Calibrate { common } => commands::cmd_calibrate(&load_config(&common)?),
        Cmd::Run {
            common,
            sampler,
            wall_time,
            save_history,
            history,
            kde,
        } => commands::cmd_run(
            &load_config(&common)?,
            &sampler,
            &commands::RunFlags {
                wall_time,
                save_history,
                history,
                kde,
            },
        ),
        Cmd::Replicate {
            common,
            threads,
            wall_time,
        } => commands::cmd_replicate(&load_config(&common)?, threads, wall_time),
        Cmd::IngestReturns { prices, out } => commands::cmd_ingest_returns(&prices, &out),
        Cmd::Defaults => commands::cmd_defaults(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            match e {
                CliError::Usage(_) => ExitCode::from(2),
                CliError::Runtime(_) => ExitCode::from(1),
            }
        }
    }
}
