//! Gelman–Rubin potential scale reduction (classic, non-split form).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sampler::Posterior;

pub const DEFAULT_RHAT_THRESHOLD: f64 = 1.01;

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// R̂ over `m >= 2` chains of common length `n >= 2`.
///
/// Returns `+inf` when chains are internally constant but disagree, and 1
/// when every value in every chain is identical.
pub fn rhat(chains: &[&[f64]]) -> Result<f64> {
    let m = chains.len();
    if m < 2 {
        return Err(Error::InvalidConfig(format!(
            "R-hat needs at least 2 chains, got {m}"
        )));
    }
    let n = chains[0].len();
    if n < 2 || chains.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidConfig(
            "R-hat needs equal-length chains of at least 2 draws".into(),
        ));
    }
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let w = mean(
        &chains
            .iter()
            .map(|c| sample_variance(c))
            .collect::<Vec<_>>(),
    );
    let nf = n as f64;
    let between = nf * sample_variance(&means);
    if w == 0.0 {
        return Ok(if between == 0.0 { 1.0 } else { f64::INFINITY });
    }
    let v_hat = (nf - 1.0) / nf * w + between / nf;
    Ok((v_hat / w).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhatEntry {
    pub parameter: String,
    pub rhat: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhatReport {
    pub threshold: f64,
    pub entries: Vec<RhatEntry>,
}

impl RhatReport {
    pub fn all_converged(&self) -> bool {
        self.entries.iter().all(|e| e.converged)
    }

    pub fn get(&self, parameter: &str) -> Option<&RhatEntry> {
        self.entries.iter().find(|e| e.parameter == parameter)
    }

    /// `parameter,rhat,converged` table.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("parameter,rhat,converged\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{}\n", e.parameter, e.rhat, e.converged));
        }
        out
    }
}

pub fn rhat_report(posterior: &Posterior, threshold: f64) -> Result<RhatReport> {
    let entries = posterior
        .params()
        .into_iter()
        .map(|p| {
            let r = rhat(&posterior.chain_series(p))?;
            Ok(RhatEntry {
                parameter: p.to_string(),
                rhat: r,
                converged: r <= threshold,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RhatReport { threshold, entries })
}
