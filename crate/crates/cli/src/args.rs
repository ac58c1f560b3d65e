use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use hbnum::model::{Bounds, ModelSpec};
use hbnum::sampler::SamplerConfig;

use crate::config::ConfigFile;

#[derive(Parser, Debug)]
#[command(
    name = "hbnum",
    version,
    about = "Hierarchical Bayesian regression for SNARC and numerical distance effects"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit the hierarchical model to a trial or cell file.
    Fit(FitArgs),
    /// Replicate the shrinkage simulation and tabulate both methods.
    Simulate(SimulateArgs),
    /// Bayesian versus classical analysis of one dataset.
    Compare(CompareArgs),
    /// Recompute diagnostics and summaries from an existing samples file.
    Summarize(SummarizeArgs),
    /// List the registered models and Bayes factor methods.
    List,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SamplerArgs {
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct PriorArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub intercept_lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub intercept_hi: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub slope_lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub slope_hi: Option<f64>,
    /// Shape of the gamma priors on both precisions.
    #[arg(long)]
    pub gamma_shape: Option<f64>,
    /// Rate of the gamma priors on both precisions.
    #[arg(long)]
    pub gamma_rate: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ReportArgs {
    /// Posterior density estimator for the Bayes factor: normal or kde.
    #[arg(long)]
    pub bf_method: Option<String>,
    #[arg(long)]
    pub hpdi_mass: Option<f64>,
    #[arg(long)]
    pub rhat_threshold: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct InputArgs {
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// `trials` (raw trials, filtered and aggregated) or `cells`
    /// (`subject,x,y`, fitted directly).
    #[arg(long)]
    pub input_kind: Option<InputKind>,
    /// Trials slower than this (ms) are dropped. Defaults per model.
    #[arg(long)]
    pub rt_cutoff: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    Trials,
    Cells,
}

impl std::str::FromStr for InputKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Self as clap::ValueEnum>::from_str(s, true)
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct SimArgs {
    #[arg(long)]
    pub subjects: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub slope_mean: Option<f64>,
    #[arg(long)]
    pub slope_sd: Option<f64>,
    #[arg(long)]
    pub noise_sd: Option<f64>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[command(flatten)]
    pub report: ReportArgs,
    /// Flat `key = value` file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long)]
    pub replications: Option<usize>,
    /// Level of the classical interval; the HPDI uses the same mass.
    #[arg(long)]
    pub ci_level: Option<f64>,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[arg(long)]
    pub bf_method: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Without `--input`, a dataset is simulated from the `--subjects`,
    /// `--slope-mean`, `--slope-sd` and `--noise-sd` settings.
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long)]
    pub ci_level: Option<f64>,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[arg(long)]
    pub bf_method: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SummarizeArgs {
    #[arg(long)]
    pub samples: Option<PathBuf>,
    /// Model whose default priors apply (for the Bayes factor).
    #[arg(long)]
    pub model: Option<String>,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[command(flatten)]
    pub report: ReportArgs,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub const SAMPLER_KEYS: &[&str] = &["chains", "iters", "burnin", "thin", "seed"];
pub const PRIOR_KEYS: &[&str] = &[
    "intercept-lo",
    "intercept-hi",
    "slope-lo",
    "slope-hi",
    "gamma-shape",
    "gamma-rate",
];
pub const REPORT_KEYS: &[&str] = &["bf-method", "hpdi-mass", "rhat-threshold"];
pub const INPUT_KEYS: &[&str] = &["model", "input", "input-kind", "rt-cutoff"];
pub const SIM_KEYS: &[&str] = &["subjects", "slope-mean", "slope-sd", "noise-sd"];

/// Rejects config keys the subcommand does not understand.
pub fn check_keys(cfg: &ConfigFile, groups: &[&[&str]]) -> Result<()> {
    for key in cfg.keys() {
        if !groups.iter().any(|g| g.contains(&key)) {
            bail!("unknown config key '{key}'");
        }
    }
    Ok(())
}

impl SamplerArgs {
    pub fn resolve(&self, cfg: &ConfigFile) -> Result<SamplerConfig> {
        let d = SamplerConfig::default();
        let c = SamplerConfig {
            n_chains: cfg.layer(self.chains, "chains")?.unwrap_or(d.n_chains),
            n_iterations: cfg.layer(self.iters, "iters")?.unwrap_or(d.n_iterations),
            n_burnin: cfg.layer(self.burnin, "burnin")?.unwrap_or(d.n_burnin),
            thin: cfg.layer(self.thin, "thin")?.unwrap_or(d.thin),
            seed: cfg.layer(self.seed, "seed")?.unwrap_or(d.seed),
        };
        c.validate()?;
        Ok(c)
    }
}

impl PriorArgs {
    pub fn resolve(&self, cfg: &ConfigFile, base: ModelSpec) -> Result<ModelSpec> {
        let spec = ModelSpec {
            intercept_bounds: Bounds::new(
                cfg.layer(self.intercept_lo, "intercept-lo")?
                    .unwrap_or(base.intercept_bounds.lo),
                cfg.layer(self.intercept_hi, "intercept-hi")?
                    .unwrap_or(base.intercept_bounds.hi),
            ),
            slope_mean_bounds: Bounds::new(
                cfg.layer(self.slope_lo, "slope-lo")?
                    .unwrap_or(base.slope_mean_bounds.lo),
                cfg.layer(self.slope_hi, "slope-hi")?
                    .unwrap_or(base.slope_mean_bounds.hi),
            ),
            gamma_shape: cfg
                .layer(self.gamma_shape, "gamma-shape")?
                .unwrap_or(base.gamma_shape),
            gamma_rate: cfg
                .layer(self.gamma_rate, "gamma-rate")?
                .unwrap_or(base.gamma_rate),
            ..base
        };
        spec.validate()?;
        Ok(spec)
    }
}

pub struct ReportSettings {
    pub bf_method: String,
    pub hpdi_mass: f64,
    pub rhat_threshold: f64,
}

impl ReportArgs {
    pub fn resolve(&self, cfg: &ConfigFile) -> Result<ReportSettings> {
        let s = ReportSettings {
            bf_method: cfg
                .layer(self.bf_method.clone(), "bf-method")?
                .unwrap_or_else(|| "normal".into()),
            hpdi_mass: cfg.layer(self.hpdi_mass, "hpdi-mass")?.unwrap_or(0.95),
            rhat_threshold: cfg
                .layer(self.rhat_threshold, "rhat-threshold")?
                .unwrap_or(hbnum::diagnostics::DEFAULT_RHAT_THRESHOLD),
        };
        if !(s.hpdi_mass > 0.0 && s.hpdi_mass < 1.0) {
            bail!("hpdi-mass must lie in (0, 1), got {}", s.hpdi_mass);
        }
        if !(s.rhat_threshold >= 1.0) {
            bail!(
                "rhat-threshold must be at least 1, got {}",
                s.rhat_threshold
            );
        }
        Ok(s)
    }
}

pub fn required<T>(value: Option<T>, what: &str) -> Result<T> {
    match value {
        Some(v) => Ok(v),
        None => bail!("missing --{what} (flag or config key)"),
    }
}
