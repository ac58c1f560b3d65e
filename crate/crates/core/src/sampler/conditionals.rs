//! Closed-form full conditionals of the hierarchical regression model.
//!
//! `tau` is the residual precision `1/sigma2`, `tau_b` the slope precision
//! `1/sigma2_b`.

use super::draws::{GammaParams, NormalParams, TruncatedNormalParams};
use crate::dataset::{Obs, RegressionData};
use crate::error::{Error, Result};
use crate::model::{Bounds, ParameterState};

fn nonempty(cells: &[Obs], what: &str) -> Result<()> {
    if cells.is_empty() {
        Err(Error::DimensionMismatch(format!(
            "{what} needs at least one cell"
        )))
    } else {
        Ok(())
    }
}

/// Intercept given the subject's slope: normal around the mean residual,
/// truncated to the intercept prior bounds.
pub fn alpha_conditional(
    cells: &[Obs],
    beta_i: f64,
    tau: f64,
    bounds: Bounds,
) -> Result<TruncatedNormalParams> {
    nonempty(cells, "alpha conditional")?;
    let n = cells.len() as f64;
    let sum: f64 = cells.iter().map(|c| c.y - beta_i * c.x).sum();
    Ok(TruncatedNormalParams {
        mean: sum / n,
        variance: 1.0 / (n * tau),
        lower: bounds.lo,
        upper: bounds.hi,
    })
}

pub fn beta_conditional(
    cells: &[Obs],
    alpha_i: f64,
    tau: f64,
    b: f64,
    tau_b: f64,
) -> Result<NormalParams> {
    nonempty(cells, "beta conditional")?;
    let (sxx, sxr) = cells.iter().fold((0.0, 0.0), |(sxx, sxr), c| {
        (sxx + c.x * c.x, sxr + c.x * (c.y - alpha_i))
    });
    let precision = tau_b + tau * sxx;
    Ok(NormalParams {
        mean: (tau_b * b + tau * sxr) / precision,
        variance: 1.0 / precision,
    })
}

pub fn b_conditional(betas: &[f64], tau_b: f64, bounds: Bounds) -> Result<TruncatedNormalParams> {
    if betas.is_empty() {
        return Err(Error::DimensionMismatch(
            "b conditional needs at least one subject".into(),
        ));
    }
    let n = betas.len() as f64;
    Ok(TruncatedNormalParams {
        mean: betas.iter().sum::<f64>() / n,
        variance: 1.0 / (n * tau_b),
        lower: bounds.lo,
        upper: bounds.hi,
    })
}

pub fn slope_precision_conditional(
    betas: &[f64],
    b: f64,
    gamma_shape: f64,
    gamma_rate: f64,
) -> Result<GammaParams> {
    if betas.is_empty() {
        return Err(Error::DimensionMismatch(
            "slope precision needs at least one subject".into(),
        ));
    }
    let ss: f64 = betas.iter().map(|&beta| (beta - b) * (beta - b)).sum();
    Ok(GammaParams {
        shape: gamma_shape + 0.5 * betas.len() as f64,
        rate: gamma_rate + 0.5 * ss,
    })
}

pub fn residual_precision_conditional(
    data: &RegressionData,
    state: &ParameterState,
    gamma_shape: f64,
    gamma_rate: f64,
) -> Result<GammaParams> {
    if state.alpha.len() != data.n_subjects() || state.beta.len() != data.n_subjects() {
        return Err(Error::DimensionMismatch(
            "state does not match data subjects".into(),
        ));
    }
    let mut ss = 0.0;
    for (i, cells) in data.groups().iter().enumerate() {
        for c in cells {
            let r = state.residual(i, c.x, c.y);
            ss += r * r;
        }
    }
    Ok(GammaParams {
        shape: gamma_shape + 0.5 * data.n_cells() as f64,
        rate: gamma_rate + 0.5 * ss,
    })
}
