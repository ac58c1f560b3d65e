//! Random variates for the Gibbs conditionals.

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, StandardNormal};
use serde::Serialize;
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalParams {
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncatedNormalParams {
    pub mean: f64,
    pub variance: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Gamma law parameterized by shape and rate (mean = shape / rate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaParams {
    pub shape: f64,
    pub rate: f64,
}

impl NormalParams {
    pub fn validate(&self) -> Result<()> {
        if self.mean.is_finite() && self.variance > 0.0 && self.variance.is_finite() {
            Ok(())
        } else {
            Err(Error::Sampling(format!(
                "invalid normal parameters {self:?}"
            )))
        }
    }
}

impl TruncatedNormalParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.mean.is_finite()
            && self.variance > 0.0
            && self.variance.is_finite()
            && self.lower < self.upper
            && !self.lower.is_nan()
            && !self.upper.is_nan();
        if ok {
            Ok(())
        } else {
            Err(Error::Sampling(format!(
                "invalid truncated normal parameters {self:?}"
            )))
        }
    }
}

impl GammaParams {
    pub fn validate(&self) -> Result<()> {
        if self.shape > 0.0 && self.rate > 0.0 && self.shape.is_finite() && self.rate.is_finite() {
            Ok(())
        } else {
            Err(Error::Sampling(format!(
                "invalid gamma parameters {self:?}"
            )))
        }
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    pub fn variance(&self) -> f64 {
        self.shape / (self.rate * self.rate)
    }
}

/// Standardized lower bound beyond which the tail sampler takes over.
const TAIL_THRESHOLD: f64 = 5.0;
const MAX_REJECTIONS: usize = 100_000;

pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

pub fn std_normal_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

pub fn draw_normal<R: Rng + ?Sized>(params: &NormalParams, rng: &mut R) -> Result<f64> {
    params.validate()?;
    let z: f64 = StandardNormal.sample(rng);
    Ok(params.mean + params.variance.sqrt() * z)
}

pub fn draw_gamma<R: Rng + ?Sized>(params: &GammaParams, rng: &mut R) -> Result<f64> {
    params.validate()?;
    let dist = Gamma::new(params.shape, 1.0 / params.rate)
        .map_err(|e| Error::Sampling(format!("gamma({}, {}): {e}", params.shape, params.rate)))?;
    let x = dist.sample(rng);
    if x > 0.0 {
        Ok(x)
    } else {
        // shape << 1 can underflow to exactly zero
        Ok(f64::MIN_POSITIVE)
    }
}

/// Maps a uniform deviate `u` in [0, 1) through the truncated-normal
/// inverse CDF. Valid only away from the far tail (see
/// [`draw_truncated_normal`]).
pub fn truncated_normal_inverse_cdf(params: &TruncatedNormalParams, u: f64) -> Result<f64> {
    params.validate()?;
    let sd = params.variance.sqrt();
    let (a, b, sign) = standardized(params, sd);
    let z = if a >= 0.0 {
        // upper tail: work with survival probabilities for precision
        let (qa, qb) = (std_normal_cdf(-a), std_normal_cdf(-b));
        let mass = qa - qb;
        check_mass(mass, params)?;
        -std_normal_quantile(qa - u * mass)
    } else {
        let (pa, pb) = (std_normal_cdf(a), std_normal_cdf(b));
        let mass = pb - pa;
        check_mass(mass, params)?;
        std_normal_quantile(pa + u * mass)
    };
    Ok(params.mean + sign * sd * z.clamp(a, b))
}

fn check_mass(mass: f64, params: &TruncatedNormalParams) -> Result<()> {
    if mass > 0.0 && mass.is_finite() {
        Ok(())
    } else {
        Err(Error::Sampling(format!(
            "truncation interval carries no probability mass: {params:?}"
        )))
    }
}

/// Standardized bounds, reflected so the interval never lies wholly below
/// the mean. Returns `(a, b, sign)`.
fn standardized(params: &TruncatedNormalParams, sd: f64) -> (f64, f64, f64) {
    let a = (params.lower - params.mean) / sd;
    let b = (params.upper - params.mean) / sd;
    if b <= 0.0 {
        (-b, -a, -1.0)
    } else {
        (a, b, 1.0)
    }
}

/// Draws from a normal restricted to `[lower, upper]`.
///
/// Inverse-CDF when the interval is within five standard deviations of the
/// mean; otherwise exponential (or, for short intervals, uniform)
/// rejection in the tail.
pub fn draw_truncated_normal<R: Rng + ?Sized>(
    params: &TruncatedNormalParams,
    rng: &mut R,
) -> Result<f64> {
    params.validate()?;
    let sd = params.variance.sqrt();
    let (a, b, sign) = standardized(params, sd);
    if a < TAIL_THRESHOLD {
        let u: f64 = rng.random();
        return truncated_normal_inverse_cdf(params, u);
    }
    let z = tail_sample(a, b, rng)
        .ok_or_else(|| Error::Sampling(format!("tail rejection sampler exhausted: {params:?}")))?;
    Ok(params.mean + sign * sd * z)
}

fn tail_sample<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Option<f64> {
    if b - a < 1.0 / a {
        for _ in 0..MAX_REJECTIONS {
            let z = a + (b - a) * rng.random::<f64>();
            if rng.random::<f64>() <= (0.5 * (a * a - z * z)).exp() {
                return Some(z);
            }
        }
        return None;
    }
    let lambda = 0.5 * (a + (a * a + 4.0).sqrt());
    let exp = Exp::new(lambda).expect("positive rate");
    for _ in 0..MAX_REJECTIONS {
        let z = a + exp.sample(rng);
        if z > b {
            continue;
        }
        let d = z - lambda;
        if rng.random::<f64>() <= (-0.5 * d * d).exp() {
            return Some(z);
        }
    }
    None
}
