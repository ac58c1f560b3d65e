//! Synthetic parity-task datasets and the Bayesian-vs-classical comparison.

use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{RegressionData, SnarcCell, SnarcDataset};
use crate::diagnostics::rhat;
use crate::error::{Error, Result};
use crate::inference::{
    hpdi, posterior_mode, savage_dickey_bf, BayesFactorResult, Hpdi, NullDensityEstimator,
};
use crate::model::{Bounds, ModelSpec};
use crate::rca::{mean_ci, one_sample_t, rca_slopes, Interval, TTestResult};
use crate::sampler::{run_chains, ParamId, Posterior, SamplerConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub n_subjects: usize,
    pub predictor_values: Vec<f64>,
    pub slope_mean: f64,
    pub slope_sd: f64,
    pub intercept_range: Bounds,
    /// Standard deviation of the cell-level noise.
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_subjects: 15,
            predictor_values: vec![1.0, 2.0, 8.0, 9.0],
            slope_mean: -10.0,
            slope_sd: 1.0,
            intercept_range: Bounds::new(-200.0, 200.0),
            noise_sd: 100.0,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_subjects == 0 || self.predictor_values.is_empty() {
            return Err(Error::InvalidConfig(
                "simulation needs subjects and predictor values".into(),
            ));
        }
        if !(self.slope_sd > 0.0 && self.noise_sd > 0.0) {
            return Err(Error::InvalidConfig(
                "simulation standard deviations must be positive".into(),
            ));
        }
        if !(self.intercept_range.lo < self.intercept_range.hi) {
            return Err(Error::InvalidConfig(
                "intercept range must satisfy lo < hi".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrueParams {
    pub intercepts: Vec<f64>,
    pub slopes: Vec<f64>,
}

/// Draws, per subject in turn, an intercept, a slope and one noisy cell per
/// predictor value.
pub fn generate_snarc_sim(config: &SimConfig) -> Result<(SnarcDataset, TrueParams)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let slope = Normal::new(config.slope_mean, config.slope_sd)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let noise =
        Normal::new(0.0, config.noise_sd).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let width = config.intercept_range.width();
    let digits = config.n_subjects.to_string().len();

    let mut subjects = Vec::with_capacity(config.n_subjects);
    let mut cells = Vec::with_capacity(config.n_subjects * config.predictor_values.len());
    let mut truth = TrueParams {
        intercepts: Vec::with_capacity(config.n_subjects),
        slopes: Vec::with_capacity(config.n_subjects),
    };
    for i in 0..config.n_subjects {
        let name = format!("sim{:0digits$}", i + 1);
        let a = config.intercept_range.lo + width * rng.random::<f64>();
        let b = slope.sample(&mut rng);
        for &x in &config.predictor_values {
            cells.push(SnarcCell {
                subject: name.clone(),
                stimulus: x as i64,
                drt: a + b * x + noise.sample(&mut rng),
            });
        }
        truth.intercepts.push(a);
        truth.slopes.push(b);
        subjects.push(name);
    }
    Ok((SnarcDataset { cells, subjects }, truth))
}

/// Bayesian and classical estimates of the group slope on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub bayes_hpdi: Hpdi,
    pub bayes_mode: f64,
    pub bayes_mean: f64,
    pub rhat_b: f64,
    pub posterior_mean_slopes: Vec<f64>,
    pub classical_slopes: Vec<f64>,
    pub classical_ci: Interval,
    pub t_result: TTestResult,
    pub bayes_factor: BayesFactorResult,
    pub truth: Option<SimConfig>,
}

impl ComparisonReport {
    pub fn bf10(&self) -> f64 {
        self.bayes_factor.bf10
    }
}

/// Runs both pipelines on `data`. The HPDI mass equals `ci_level`.
pub fn compare_methods(
    data: &RegressionData,
    spec: &ModelSpec,
    sampler: &SamplerConfig,
    ci_level: f64,
    estimator: &dyn NullDensityEstimator,
) -> Result<ComparisonReport> {
    let posterior = run_chains(spec, data, sampler)?;
    compare_on_posterior(data, &posterior, ci_level, estimator)
}

/// As [`compare_methods`] for draws already sampled from `data`.
pub fn compare_on_posterior(
    data: &RegressionData,
    posterior: &Posterior,
    ci_level: f64,
    estimator: &dyn NullDensityEstimator,
) -> Result<ComparisonReport> {
    let spec = &posterior.spec;
    let classical_slopes = rca_slopes(data)?;
    let t_result = one_sample_t(&classical_slopes, 0.0)?;
    let classical_ci = mean_ci(&classical_slopes, ci_level)?;

    let b = posterior.pooled(ParamId::B);
    let rhat_b = if posterior.chains.len() >= 2 {
        rhat(&posterior.chain_series(ParamId::B))?
    } else {
        f64::NAN
    };
    let bayes_factor = savage_dickey_bf(&b, spec.slope_mean_bounds.uniform_density(), estimator)?;
    let mean_state = posterior.mean_state();
    Ok(ComparisonReport {
        bayes_hpdi: hpdi(&b, ci_level)?,
        bayes_mode: posterior_mode(&b)?,
        bayes_mean: mean_state.b,
        rhat_b,
        posterior_mean_slopes: mean_state.beta,
        classical_slopes,
        classical_ci,
        t_result,
        bayes_factor,
        truth: None,
    })
}

/// Simulates one dataset from `sim` and compares both methods on it. The
/// sampler reuses the simulation seed.
pub fn simulate_and_compare(
    sim: &SimConfig,
    spec: &ModelSpec,
    sampler: &SamplerConfig,
    ci_level: f64,
    estimator: &dyn NullDensityEstimator,
) -> Result<ComparisonReport> {
    let (dataset, _) = generate_snarc_sim(sim)?;
    let data = dataset.to_regression_data()?;
    let sampler = SamplerConfig {
        seed: sim.seed,
        ..*sampler
    };
    let mut report = compare_methods(&data, spec, &sampler, ci_level, estimator)?;
    report.truth = Some(sim.clone());
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub seed: u64,
    pub hpdi_lo: f64,
    pub hpdi_hi: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub t: f64,
    pub p: f64,
    pub bf10: f64,
    pub covered_bayes: bool,
    pub covered_classical: bool,
}

impl SweepRow {
    pub fn hpdi_narrower(&self) -> bool {
        self.hpdi_hi - self.hpdi_lo < self.ci_hi - self.ci_lo
    }
}

/// Replication `r` uses seed `base.seed + r` for both simulation and
/// sampling. Replications run in parallel; rows come back in seed order.
pub fn replication_sweep(
    base: &SimConfig,
    replications: usize,
    spec: &ModelSpec,
    sampler: &SamplerConfig,
    ci_level: f64,
    estimator: &dyn NullDensityEstimator,
) -> Result<Vec<SweepRow>> {
    (0..replications as u64)
        .into_par_iter()
        .map(|r| {
            let sim = SimConfig {
                seed: base.seed.wrapping_add(r),
                ..base.clone()
            };
            let rep = simulate_and_compare(&sim, spec, sampler, ci_level, estimator)?;
            Ok(SweepRow {
                seed: sim.seed,
                hpdi_lo: rep.bayes_hpdi.lower,
                hpdi_hi: rep.bayes_hpdi.upper,
                ci_lo: rep.classical_ci.lower,
                ci_hi: rep.classical_ci.upper,
                t: rep.t_result.t,
                p: rep.t_result.p,
                bf10: rep.bf10(),
                covered_bayes: rep.bayes_hpdi.contains(base.slope_mean),
                covered_classical: rep.classical_ci.contains(base.slope_mean),
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out =
        String::from("seed,hpdi_lo,hpdi_hi,ci_lo,ci_hi,t,p,bf10,covered_bayes,covered_classical\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.seed,
            r.hpdi_lo,
            r.hpdi_hi,
            r.ci_lo,
            r.ci_hi,
            r.t,
            r.p,
            r.bf10,
            r.covered_bayes,
            r.covered_classical
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSummary {
    pub replications: usize,
    pub frac_hpdi_narrower: f64,
    pub coverage_bayes: f64,
    pub coverage_classical: f64,
    /// Replications where the t-test misses at 0.05 but bf10 exceeds 10.
    pub classical_miss_bayes_detects: usize,
}

pub fn summarize_sweep(rows: &[SweepRow]) -> SweepSummary {
    let n = rows.len().max(1) as f64;
    let frac = |f: &dyn Fn(&SweepRow) -> bool| rows.iter().filter(|r| f(r)).count() as f64 / n;
    SweepSummary {
        replications: rows.len(),
        frac_hpdi_narrower: frac(&SweepRow::hpdi_narrower),
        coverage_bayes: frac(&|r| r.covered_bayes),
        coverage_classical: frac(&|r| r.covered_classical),
        classical_miss_bayes_detects: rows.iter().filter(|r| r.p > 0.05 && r.bf10 > 10.0).count(),
    }
}
