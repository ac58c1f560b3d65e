//! Posterior summaries and Savage–Dickey Bayes factors.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::registry::{Named, Registry};

pub const MODE_GRID_POINTS: usize = 512;
/// Kernels further than this many bandwidths away are skipped.
const KERNEL_CUTOFF: f64 = 9.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hpdi {
    pub lower: f64,
    pub upper: f64,
    pub mass: f64,
}

impl Hpdi {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lower && v <= self.upper
    }
}

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Number of sorted draws an HPDI window of `mass` spans.
pub fn hpdi_window_len(n: usize, mass: f64) -> usize {
    // guard against mass * n landing a hair above an integer
    let m = (mass * n as f64 - 1e-9).ceil() as usize;
    m.clamp(1, n)
}

/// Narrowest interval holding `mass` of the draws. Ties go to the lowest
/// window.
pub fn hpdi(samples: &[f64], mass: f64) -> Result<Hpdi> {
    if samples.len() < 2 {
        return Err(Error::DegenerateSample(
            "HPDI needs at least 2 draws".into(),
        ));
    }
    if !(mass > 0.0 && mass < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "HPDI mass must lie in (0, 1), got {mass}"
        )));
    }
    let s = sorted(samples);
    let m = hpdi_window_len(s.len(), mass);
    let mut best = 0;
    let mut best_width = f64::INFINITY;
    for k in 0..=s.len() - m {
        let w = s[k + m - 1] - s[k];
        if w < best_width {
            best_width = w;
            best = k;
        }
    }
    Ok(Hpdi {
        lower: s[best],
        upper: s[best + m - 1],
        mass,
    })
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(s: &[f64], q: f64) -> f64 {
    let pos = q * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    s[lo] + (pos - lo as f64) * (s[hi] - s[lo])
}

pub fn mean_sd(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Gaussian kernel density estimate with Silverman's bandwidth
/// `0.9 * min(sd, IQR / 1.34) * n^(-1/5)`.
#[derive(Debug, Clone)]
pub struct Kde {
    sorted: Vec<f64>,
    bandwidth: f64,
}

impl Kde {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::DegenerateSample(
                "density estimate needs at least 2 draws".into(),
            ));
        }
        let s = sorted(samples);
        let (_, sd) = mean_sd(&s);
        let iqr = quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25);
        let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
        if !(spread > 0.0 && spread.is_finite()) {
            return Err(Error::DegenerateSample("draws have zero spread".into()));
        }
        let bandwidth = 0.9 * spread * (s.len() as f64).powf(-0.2);
        Ok(Self {
            sorted: s,
            bandwidth,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max(&self) -> f64 {
        self.sorted[self.sorted.len() - 1]
    }

    pub fn density(&self, point: f64) -> f64 {
        let h = self.bandwidth;
        let lo = self
            .sorted
            .partition_point(|&x| x < point - KERNEL_CUTOFF * h);
        let hi = self
            .sorted
            .partition_point(|&x| x <= point + KERNEL_CUTOFF * h);
        let sum: f64 = self.sorted[lo..hi]
            .iter()
            .map(|&x| {
                let z = (point - x) / h;
                (-0.5 * z * z).exp()
            })
            .sum();
        sum / (self.sorted.len() as f64 * h * (2.0 * PI).sqrt())
    }

    /// The uniform grid `[min - 3h, max + 3h]` used for mode search and
    /// plotting.
    pub fn grid(&self, points: usize) -> Vec<f64> {
        let lo = self.min() - 3.0 * self.bandwidth;
        let hi = self.max() + 3.0 * self.bandwidth;
        let step = (hi - lo) / (points - 1) as f64;
        (0..points).map(|k| lo + k as f64 * step).collect()
    }

    pub fn mode(&self) -> f64 {
        let mut best = (f64::NEG_INFINITY, 0.0);
        for x in self.grid(MODE_GRID_POINTS) {
            let d = self.density(x);
            if d > best.0 {
                best = (d, x);
            }
        }
        best.1
    }
}

pub fn kde_density(samples: &[f64], point: f64) -> Result<f64> {
    Ok(Kde::new(samples)?.density(point))
}

/// Grid argmax of the kernel density estimate.
pub fn posterior_mode(samples: &[f64]) -> Result<f64> {
    Ok(Kde::new(samples)?.mode())
}

/// Fraction of draws strictly below `threshold`.
pub fn tail_prob(samples: &[f64], threshold: f64) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    samples.iter().filter(|&&x| x < threshold).count() as f64 / samples.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BfMethod {
    NormalApprox,
    Kde,
}

/// Estimates the posterior density at a point from draws; the pluggable
/// half of a Savage–Dickey ratio.
pub trait NullDensityEstimator: Named + Send + Sync {
    fn method(&self) -> BfMethod;
    fn density_at(&self, samples: &[f64], point: f64) -> Result<f64>;
}

/// Normal density with the draws' mean and standard deviation.
pub struct NormalApprox;

impl Named for NormalApprox {
    fn name(&self) -> &'static str {
        "normal"
    }
}

impl NullDensityEstimator for NormalApprox {
    fn method(&self) -> BfMethod {
        BfMethod::NormalApprox
    }

    fn density_at(&self, samples: &[f64], point: f64) -> Result<f64> {
        if samples.len() < 2 {
            return Err(Error::DegenerateSample(
                "normal approximation needs at least 2 draws".into(),
            ));
        }
        let (mean, sd) = mean_sd(samples);
        if !(sd > 0.0) {
            return Err(Error::DegenerateSample("draws have zero spread".into()));
        }
        let z = (point - mean) / sd;
        Ok((-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt()))
    }
}

pub struct KdeDensity;

impl Named for KdeDensity {
    fn name(&self) -> &'static str {
        "kde"
    }
}

impl NullDensityEstimator for KdeDensity {
    fn method(&self) -> BfMethod {
        BfMethod::Kde
    }

    fn density_at(&self, samples: &[f64], point: f64) -> Result<f64> {
        kde_density(samples, point)
    }
}

pub type DensityRegistry = Registry<dyn NullDensityEstimator>;

pub fn builtin_density_estimators() -> DensityRegistry {
    let mut reg = DensityRegistry::new("Bayes factor method");
    reg.register(Box::new(NormalApprox))
        .register(Box::new(KdeDensity));
    reg
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BayesFactorResult {
    /// Evidence for a nonzero effect over the point null.
    pub bf10: f64,
    pub prior_density_at_null: f64,
    pub posterior_density_at_null: f64,
    pub method: BfMethod,
    /// Set when the posterior density at the null underflowed to zero and
    /// `bf10` is reported as infinite.
    pub underflow: bool,
}

/// Savage–Dickey ratio for the point null 0: prior density at 0 over
/// posterior density at 0.
pub fn savage_dickey_bf(
    samples: &[f64],
    prior_density_at_null: f64,
    estimator: &dyn NullDensityEstimator,
) -> Result<BayesFactorResult> {
    if !(prior_density_at_null > 0.0 && prior_density_at_null.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "prior density at the null must be positive, got {prior_density_at_null}"
        )));
    }
    let posterior = estimator.density_at(samples, 0.0)?;
    let underflow = !(posterior >= f64::MIN_POSITIVE);
    Ok(BayesFactorResult {
        bf10: if underflow {
            f64::INFINITY
        } else {
            prior_density_at_null / posterior
        },
        prior_density_at_null,
        posterior_density_at_null: if underflow { 0.0 } else { posterior },
        method: estimator.method(),
        underflow,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamSummary {
    pub mean: f64,
    pub sd: f64,
    pub mode: f64,
    pub hpdi: Hpdi,
    pub p_below_zero: f64,
}

pub fn summarize(samples: &[f64], mass: f64) -> Result<ParamSummary> {
    let (mean, sd) = mean_sd(samples);
    let mode = match posterior_mode(samples) {
        Ok(m) => m,
        // a parameter held fixed has no spread; its mode is its value
        Err(Error::DegenerateSample(_)) if sd == 0.0 => mean,
        Err(e) => return Err(e),
    };
    Ok(ParamSummary {
        mean,
        sd,
        mode,
        hpdi: hpdi(samples, mass)?,
        p_below_zero: tail_prob(samples, 0.0),
    })
}
