use std::collections::BTreeMap;
use std::io::Write;

use super::{ChainSamples, ParamId, Posterior};
use crate::error::{Error, Result};
use crate::model::{ModelSpec, ParameterState};

/// Writes draws in long format, `chain,iteration,parameter,value`, with
/// 1-based chain numbers. Floats use shortest round-trip formatting so the
/// file is lossless and byte-stable.
pub fn write_samples_csv<W: Write>(posterior: &Posterior, mut out: W) -> Result<()> {
    writeln!(out, "chain,iteration,parameter,value")?;
    let params = posterior.params();
    let names: Vec<String> = params.iter().map(ToString::to_string).collect();
    for chain in &posterior.chains {
        let series: Vec<&[f64]> = params.iter().map(|&p| chain.series(p)).collect();
        for (k, it) in chain.iterations.iter().enumerate() {
            for (name, s) in names.iter().zip(&series) {
                writeln!(out, "{},{},{},{}", chain.chain_index + 1, it, name, s[k])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Default)]
struct ChainBuilder {
    iterations: Vec<u64>,
    values: BTreeMap<ParamId, Vec<f64>>,
}

/// Reads a samples file back into a [`Posterior`]. Subject names are not
/// stored in the file, so subjects are labelled `1..=N`.
pub fn read_samples_csv(text: &str, spec: ModelSpec) -> Result<Posterior> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if header.iter().collect::<Vec<_>>() != ["chain", "iteration", "parameter", "value"] {
        return Err(Error::Parse {
            line: 1,
            message: "expected header 'chain,iteration,parameter,value'".into(),
        });
    }
    let mut chains: BTreeMap<usize, ChainBuilder> = BTreeMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let perr = |m: String| Error::Parse { line, message: m };
        let chain: usize = row[0]
            .parse()
            .map_err(|_| perr(format!("bad chain '{}'", &row[0])))?;
        if chain == 0 {
            return Err(perr("chain numbers start at 1".into()));
        }
        let it: u64 = row[1]
            .parse()
            .map_err(|_| perr(format!("bad iteration '{}'", &row[1])))?;
        let param: ParamId = row[2].parse().map_err(|e: Error| perr(e.to_string()))?;
        let value: f64 = row[3]
            .parse()
            .map_err(|_| perr(format!("bad value '{}'", &row[3])))?;
        let cb = chains.entry(chain - 1).or_default();
        if cb.iterations.last() != Some(&it) {
            cb.iterations.push(it);
        }
        cb.values.entry(param).or_default().push(value);
    }

    let mut out = Vec::with_capacity(chains.len());
    let mut n_subjects = None;
    for (idx, mut cb) in chains {
        let n = cb
            .values
            .keys()
            .filter(|p| matches!(p, ParamId::Alpha(_)))
            .count();
        if *n_subjects.get_or_insert(n) != n {
            return Err(Error::DimensionMismatch(
                "chains disagree on subject count".into(),
            ));
        }
        let len = cb.iterations.len();
        let expected = ParamId::all(n);
        if cb.values.len() != expected.len() || cb.values.values().any(|v| v.len() != len) {
            return Err(Error::DimensionMismatch(format!(
                "chain {} has an incomplete parameter set",
                idx + 1
            )));
        }
        let mut take = |p: ParamId| {
            cb.values
                .remove(&p)
                .ok_or_else(|| Error::DimensionMismatch(format!("chain {} lacks {p}", idx + 1)))
        };
        let alpha = (0..n)
            .map(|i| take(ParamId::Alpha(i)))
            .collect::<Result<Vec<_>>>()?;
        let beta = (0..n)
            .map(|i| take(ParamId::Beta(i)))
            .collect::<Result<Vec<_>>>()?;
        out.push(ChainSamples {
            chain_index: idx,
            iterations: cb.iterations,
            alpha,
            beta,
            b: take(ParamId::B)?,
            sigma2_b: take(ParamId::Sigma2B)?,
            sigma2: take(ParamId::Sigma2)?,
        });
    }
    let n = n_subjects.unwrap_or(0);
    Posterior::from_chains(
        out,
        spec,
        (1..=n).map(|i| i.to_string()).collect(),
        String::new(),
    )
}

impl Posterior {
    /// Posterior mean of every parameter, as a state.
    pub fn mean_state(&self) -> ParameterState {
        let mean = |p: ParamId| {
            let v = self.pooled(p);
            v.iter().sum::<f64>() / v.len() as f64
        };
        let n = self.n_subjects();
        ParameterState {
            alpha: (0..n).map(|i| mean(ParamId::Alpha(i))).collect(),
            beta: (0..n).map(|i| mean(ParamId::Beta(i))).collect(),
            b: mean(ParamId::B),
            sigma2_b: mean(ParamId::Sigma2B),
            sigma2: mean(ParamId::Sigma2),
        }
    }
}
