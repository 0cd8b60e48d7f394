//! Experiment configuration: one JSON document validated before any
//! compute starts. Command-line flags override the seed and output
//! directory; every other knob lives here.

use lfi_core::calibration::CalibrationConfig;
use lfi_core::models::{self, Model};
use lfi_core::samplers::SamplerConfig;
use lfi_core::study::{Baseline, SamplerName, SamplerSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: String,
    /// True parameter for synthetic data generation. Mutually exclusive
    /// with `dataset`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<Vec<f64>>,
    /// Path to an observed dataset CSV (column `y`, or `date,y`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    /// Series length for generated data; 0 = model default.
    #[serde(default)]
    pub data_len: usize,
    #[serde(default = "d_seed")]
    pub seed: u64,
    #[serde(default = "d_out")]
    pub out_dir: String,
    #[serde(default = "d_replicates")]
    pub replicates: usize,
    /// Tolerance-ladder steps shared by the ABC samplers.
    #[serde(default = "d_j_steps")]
    pub j_steps: usize,
    /// Pilot chain length for the final tolerance.
    #[serde(default = "d_pilot")]
    pub pilot_burn_in: usize,
    #[serde(default)]
    pub calibration: CalibrationSection,
    #[serde(default)]
    pub smc: SmcSection,
    #[serde(default = "d_pf_particles")]
    pub pmcmc_particles: usize,
    /// Reference sampler for the study: "auto", "exact-ma2", "pmcmc" or "smc".
    #[serde(default = "d_baseline")]
    pub baseline: String,
    /// Reference chain length settings.
    #[serde(default)]
    pub exact: ExactSection,
    #[serde(default = "default_samplers")]
    pub samplers: Vec<SamplerSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    pub rounds: usize,
    pub n_outer: usize,
    pub n_inner: usize,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        CalibrationSection {
            rounds: 3,
            n_outer: 500,
            n_inner: 100,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmcSection {
    pub particles: usize,
    pub move_cap: usize,
}

impl Default for SmcSection {
    fn default() -> Self {
        SmcSection {
            particles: 500,
            move_cap: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactSection {
    pub iters: usize,
    pub burn_in: usize,
    pub j_steps: usize,
}

impl Default for ExactSection {
    fn default() -> Self {
        ExactSection {
            iters: 5000,
            burn_in: 2000,
            j_steps: 15,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

impl SamplerSection {
    pub fn named(name: &str) -> Self {
        SamplerSection {
            name: name.into(),
            iters: None,
            burn_in: None,
            j_steps: None,
            m: None,
            n0: None,
            c: None,
        }
    }
}

fn d_seed() -> u64 {
    1
}
fn d_out() -> String {
    "out".into()
}
fn d_replicates() -> usize {
    100
}
fn d_j_steps() -> usize {
    15
}
fn d_pilot() -> usize {
    10_000
}
fn d_pf_particles() -> usize {
    100
}
fn d_baseline() -> String {
    "auto".into()
}

fn default_samplers() -> Vec<SamplerSection> {
    [
        "smc", "abc-rw", "abc-is", "aabc-u", "aabc-l", "bsl-rw", "bsl-is", "absl-u", "absl-l",
    ]
    .iter()
    .map(|n| SamplerSection::named(n))
    .collect()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: "ma2".into(),
            truth: Some(vec![0.6, 0.6]),
            dataset: None,
            data_len: 0,
            seed: d_seed(),
            out_dir: d_out(),
            replicates: d_replicates(),
            j_steps: d_j_steps(),
            pilot_burn_in: d_pilot(),
            calibration: CalibrationSection::default(),
            smc: SmcSection::default(),
            pmcmc_particles: d_pf_particles(),
            baseline: d_baseline(),
            exact: ExactSection::default(),
            samplers: default_samplers(),
        }
    }
}

/// Chain-length defaults per sampler family: the synthetic-likelihood
/// chains run 10000 iterations with 2000 burn-in, everything else 50000
/// with 10000.
pub fn family_defaults(name: SamplerName) -> SamplerConfig {
    match name {
        SamplerName::BslRw | SamplerName::BslIs => SamplerConfig {
            iters: 10_000,
            burn_in: 2_000,
            ..SamplerConfig::default()
        },
        _ => SamplerConfig::default(),
    }
}

impl ExperimentConfig {
    pub fn model(&self) -> Result<&'static dyn Model, CliError> {
        models::by_name(&self.model).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown model '{}'; valid: ma2, ricker, svg, svs, toy",
                self.model
            ))
        })
    }

    /// Full validation; runs before any simulation.
    pub fn validate(&self) -> Result<(), CliError> {
        let model = self.model()?;
        if self.truth.is_some() && self.dataset.is_some() {
            return Err(CliError::Usage(
                "config sets both 'truth' and 'dataset'; pick one".into(),
            ));
        }
        if self.truth.is_none() && self.dataset.is_none() {
            return Err(CliError::Usage(
                "config needs 'truth' (synthetic data) or 'dataset' (observed CSV)".into(),
            ));
        }
        if let Some(truth) = &self.truth {
            if truth.len() != model.param_dim() {
                return Err(CliError::Usage(format!(
                    "truth has {} components but model '{}' has {}",
                    truth.len(),
                    self.model,
                    model.param_dim()
                )));
            }
            if !model.prior().in_support(truth) {
                return Err(CliError::Usage(format!(
                    "truth {truth:?} lies outside the '{}' prior support",
                    self.model
                )));
            }
        }
        if self.j_steps == 0 || self.pilot_burn_in < self.j_steps {
            return Err(CliError::Usage(
                "need pilot_burn_in >= j_steps >= 1".into(),
            ));
        }
        if self.smc.particles == 0 || self.smc.move_cap == 0 {
            return Err(CliError::Usage("smc needs particles and a move cap".into()));
        }
        match self.baseline.as_str() {
            "auto" | "exact-ma2" | "pmcmc" | "smc" => {}
            other => {
                return Err(CliError::Usage(format!(
                    "unknown baseline '{other}'; valid: auto, exact-ma2, pmcmc, smc"
                )))
            }
        }
        for section in &self.samplers {
            let spec = self.sampler_spec(&section.name)?;
            spec.cfg
                .validate()
                .map_err(|e| CliError::Usage(format!("sampler '{}': {e}", section.name)))?;
        }
        Ok(())
    }

    /// Resolve one sampler's run configuration (overrides over family
    /// defaults).
    pub fn sampler_spec(&self, name: &str) -> Result<SamplerSpec, CliError> {
        let parsed = SamplerName::parse(name).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown sampler '{name}'; valid: {}, exact, pmcmc",
                SamplerName::ALL
                    .iter()
                    .map(|s| s.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            ))
        })?;
        let mut cfg = family_defaults(parsed);
        if let Some(section) = self.samplers.iter().find(|s| s.name == name) {
            if let Some(v) = section.iters {
                cfg.iters = v;
            }
            if let Some(v) = section.burn_in {
                cfg.burn_in = v;
            }
            if let Some(v) = section.j_steps {
                cfg.j_steps = v;
            }
            if let Some(v) = section.m {
                cfg.m = v;
            }
            if let Some(v) = section.n0 {
                cfg.n0 = v;
            }
            if let Some(v) = section.c {
                cfg.c = v;
            }
        }
        Ok(SamplerSpec { name: parsed, cfg })
    }

    pub fn study_samplers(&self) -> Result<Vec<SamplerSpec>, CliError> {
        self.samplers
            .iter()
            .map(|s| self.sampler_spec(&s.name))
            .collect()
    }

    pub fn baseline(&self, model: &dyn Model) -> Result<Baseline, CliError> {
        let exact_cfg = SamplerConfig {
            iters: self.exact.iters,
            burn_in: self.exact.burn_in,
            j_steps: self.exact.j_steps,
            ..SamplerConfig::default()
        };
        match self.baseline.as_str() {
            "exact-ma2" => Ok(Baseline::ExactMa2(exact_cfg)),
            "pmcmc" => Ok(Baseline::Pmcmc {
                particles: self.pmcmc_particles,
                cfg: exact_cfg,
            }),
            "smc" => Ok(Baseline::Smc),
            "auto" => Ok(match model.name() {
                "ma2" | "toy" => Baseline::ExactMa2(exact_cfg),
                "ricker" | "svg" => Baseline::Pmcmc {
                    particles: self.pmcmc_particles,
                    cfg: exact_cfg,
                },
                _ => Baseline::Smc,
            }),
            other => Err(CliError::Usage(format!("unknown baseline '{other}'"))),
        }
    }

    pub fn calibration_config(&self) -> CalibrationConfig {
        CalibrationConfig {
            rounds: self.calibration.rounds,
            n_outer: self.calibration.n_outer,
            n_inner: self.calibration.n_inner,
        }
    }
}
