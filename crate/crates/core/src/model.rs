//! Hierarchical regression model: priors, parameter state and the log joint
//! density.
//!
//! Observations are `y_ij ~ Normal(alpha_i + beta_i * x_j, sigma2)` with
//! `alpha_i ~ Uniform(intercept_bounds)`, `beta_i ~ Normal(b, sigma2_b)`,
//! `b ~ Uniform(slope_mean_bounds)` and Gamma(shape, rate) priors on both
//! precisions `1/sigma2_b` and `1/sigma2`.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::dataset::RegressionData;
use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Density of the uniform distribution on these bounds.
    pub fn uniform_density(&self) -> f64 {
        1.0 / self.width()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSpec {
    pub intercept_bounds: Bounds,
    pub slope_mean_bounds: Bounds,
    /// Shape of the Gamma prior on both precisions.
    pub gamma_shape: f64,
    /// Rate (inverse scale) of the Gamma prior on both precisions.
    pub gamma_rate: f64,
    pub predictor_values: Vec<f64>,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, b) in [
            ("intercept", self.intercept_bounds),
            ("slope-mean", self.slope_mean_bounds),
        ] {
            if !(b.lo.is_finite() && b.hi.is_finite() && b.lo < b.hi) {
                return Err(Error::InvalidConfig(format!(
                    "{name} bounds must satisfy lo < hi, got [{}, {}]",
                    b.lo, b.hi
                )));
            }
        }
        if !(self.gamma_shape > 0.0 && self.gamma_rate > 0.0)
            || !self.gamma_shape.is_finite()
            || !self.gamma_rate.is_finite()
        {
            return Err(Error::InvalidConfig(format!(
                "gamma hyperparameters must be positive, got shape {} rate {}",
                self.gamma_shape, self.gamma_rate
            )));
        }
        Ok(())
    }
}

/// Priors for the parity-task (SNARC) model; predictor is the digit.
pub fn snarc_spec_default() -> ModelSpec {
    ModelSpec {
        intercept_bounds: Bounds::new(-200.0, 200.0),
        slope_mean_bounds: Bounds::new(-20.0, 20.0),
        gamma_shape: 0.01,
        gamma_rate: 0.01,
        predictor_values: vec![1.0, 2.0, 8.0, 9.0],
    }
}

/// Priors for the comparison-task (distance effect) model; predictor is the
/// ratio bin index.
pub fn nde_spec_default() -> ModelSpec {
    ModelSpec {
        intercept_bounds: Bounds::new(0.0, 2000.0),
        slope_mean_bounds: Bounds::new(-100.0, 100.0),
        gamma_shape: 0.01,
        gamma_rate: 0.01,
        predictor_values: vec![1.0, 2.0, 3.0, 4.0],
    }
}

/// One point in parameter space. Variances are stored; precisions are
/// derived on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterState {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub b: f64,
    pub sigma2_b: f64,
    pub sigma2: f64,
}

impl ParameterState {
    pub fn n_subjects(&self) -> usize {
        self.alpha.len()
    }

    pub fn tau(&self) -> f64 {
        1.0 / self.sigma2
    }

    pub fn tau_b(&self) -> f64 {
        1.0 / self.sigma2_b
    }

    /// Cell mean `alpha_i + beta_i * x`.
    pub fn mu(&self, subject: usize, x: f64) -> f64 {
        self.alpha[subject] + self.beta[subject] * x
    }

    pub fn residual(&self, subject: usize, x: f64, y: f64) -> f64 {
        y - self.mu(subject, x)
    }

    fn check_dims(&self, data: &RegressionData) -> Result<()> {
        let n = data.n_subjects();
        if self.alpha.len() != n || self.beta.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "state has {} intercepts and {} slopes for {} subjects",
                self.alpha.len(),
                self.beta.len(),
                n
            )));
        }
        Ok(())
    }
}

pub fn normal_ln_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    -0.5 * (LN_2PI + variance.ln() + d * d / variance)
}

pub fn gamma_ln_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

/// Gaussian log-likelihood of all cells.
pub fn log_likelihood(data: &RegressionData, state: &ParameterState) -> Result<f64> {
    state.check_dims(data)?;
    if !(state.sigma2 > 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    let mut ll = 0.0;
    for (i, cells) in data.groups().iter().enumerate() {
        for c in cells {
            ll += normal_ln_pdf(c.y, state.mu(i, c.x), state.sigma2);
        }
    }
    Ok(ll)
}

/// Log joint density of data and parameters, with respect to Lebesgue
/// measure on `(alpha, beta, b, 1/sigma2_b, 1/sigma2)`. Returns `-inf`
/// outside the prior support.
pub fn log_joint(spec: &ModelSpec, data: &RegressionData, state: &ParameterState) -> Result<f64> {
    state.check_dims(data)?;
    if !(state.sigma2 > 0.0 && state.sigma2_b > 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    if !spec.slope_mean_bounds.contains(state.b)
        || !state
            .alpha
            .iter()
            .all(|&a| spec.intercept_bounds.contains(a))
    {
        return Ok(f64::NEG_INFINITY);
    }
    let n = state.n_subjects() as f64;
    let mut lp = -n * spec.intercept_bounds.width().ln() - spec.slope_mean_bounds.width().ln();
    lp += state
        .beta
        .iter()
        .map(|&beta| normal_ln_pdf(beta, state.b, state.sigma2_b))
        .sum::<f64>();
    lp += gamma_ln_pdf(state.tau_b(), spec.gamma_shape, spec.gamma_rate);
    lp += gamma_ln_pdf(state.tau(), spec.gamma_shape, spec.gamma_rate);
    Ok(lp + log_likelihood(data, state)?)
}
