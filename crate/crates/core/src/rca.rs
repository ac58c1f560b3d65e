//! Regression coefficient analysis: per-subject least squares followed by a
//! one-sample t-test and confidence interval on the slopes.

use serde::Serialize;
use statrs::function::beta::beta_reg;

use crate::dataset::RegressionData;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegressionFit {
    pub intercept: f64,
    pub slope: f64,
    /// `sqrt(SSE / (n - 2))`; zero when `n == 2`.
    pub residual_sd: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TTestResult {
    pub t: f64,
    pub df: usize,
    /// Two-sided.
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lower && v <= self.upper
    }
}

pub fn ols_fit(x: &[f64], y: &[f64]) -> Result<RegressionFit> {
    let degenerate = || Error::DegenerateDesign {
        subject: String::new(),
    };
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} x values for {} y values",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 2 {
        return Err(degenerate());
    }
    let nf = n as f64;
    let xm = x.iter().sum::<f64>() / nf;
    let ym = y.iter().sum::<f64>() / nf;
    let (sxx, sxy) = x.iter().zip(y).fold((0.0, 0.0), |(sxx, sxy), (&xi, &yi)| {
        (sxx + (xi - xm) * (xi - xm), sxy + (xi - xm) * (yi - ym))
    });
    if !(sxx > 0.0) {
        return Err(degenerate());
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| (yi - intercept - slope * xi).powi(2))
        .sum();
    let residual_sd = if n > 2 {
        (sse / (nf - 2.0)).sqrt()
    } else {
        0.0
    };
    Ok(RegressionFit {
        intercept,
        slope,
        residual_sd,
        n,
    })
}

/// One least-squares slope per subject, in subject order.
pub fn rca_slopes(data: &RegressionData) -> Result<Vec<f64>> {
    data.subjects()
        .iter()
        .zip(data.groups())
        .map(|(subject, cells)| {
            let x: Vec<f64> = cells.iter().map(|c| c.x).collect();
            let y: Vec<f64> = cells.iter().map(|c| c.y).collect();
            ols_fit(&x, &y).map(|f| f.slope).map_err(|e| match e {
                Error::DegenerateDesign { .. } => Error::DegenerateDesign {
                    subject: subject.clone(),
                },
                other => other,
            })
        })
        .collect()
}

/// Student-t CDF via the regularized incomplete beta function.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return if t > 0.0 { 1.0 } else { 0.0 };
    }
    let tail = 0.5 * beta_reg(0.5 * df, 0.5, df / (df + t * t));
    if t > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Inverse of [`student_t_cdf`] by bisection.
pub fn student_t_quantile(p: f64, df: f64) -> f64 {
    assert!(
        p > 0.0 && p < 1.0,
        "quantile probability must lie in (0, 1)"
    );
    let (mut lo, mut hi) = (-1.0, 1.0);
    while student_t_cdf(lo, df) > p {
        lo *= 2.0;
    }
    while student_t_cdf(hi, df) < p {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if student_t_cdf(mid, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * mid.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn one_sample_t(values: &[f64], mu0: f64) -> Result<TTestResult> {
    if values.len() < 2 {
        return Err(Error::DegenerateSample(
            "t-test needs at least 2 values".into(),
        ));
    }
    let (mean, sd) = mean_sd(values);
    if !(sd > 0.0) {
        return Err(Error::DegenerateSample(
            "t-test values have zero spread".into(),
        ));
    }
    let n = values.len();
    let t = (mean - mu0) / (sd / (n as f64).sqrt());
    let df = n - 1;
    let p = beta_reg(0.5 * df as f64, 0.5, df as f64 / (df as f64 + t * t));
    Ok(TTestResult { t, df, p })
}

/// `mean ± t*(level) · sd / sqrt(n)`.
pub fn mean_ci(values: &[f64], level: f64) -> Result<Interval> {
    if values.len() < 2 {
        return Err(Error::DegenerateSample(
            "confidence interval needs at least 2 values".into(),
        ));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    let (mean, sd) = mean_sd(values);
    let n = values.len() as f64;
    let half = student_t_quantile(0.5 + 0.5 * level, n - 1.0) * sd / n.sqrt();
    Ok(Interval {
        lower: mean - half,
        upper: mean + half,
        level,
    })
}
