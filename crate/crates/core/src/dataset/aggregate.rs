use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::cells::{Cell, RegressionData};
use super::trials::{Hand, Stimulus, TrialTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SnarcCell {
    pub subject: String,
    pub stimulus: i64,
    /// Right-hand median RT minus left-hand median RT, in ms.
    pub drt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnarcDataset {
    pub cells: Vec<SnarcCell>,
    /// Subjects in order of first appearance.
    pub subjects: Vec<String>,
}

/// Half-open ratio interval `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioBin {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NdeCell {
    pub subject: String,
    /// 1-based index into the dataset's bins.
    pub bin: usize,
    pub rt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NdeDataset {
    pub cells: Vec<NdeCell>,
    pub subjects: Vec<String>,
    pub bins: Vec<RatioBin>,
}

/// The four comparison-ratio bins used for the distance-effect task.
pub fn default_ratio_bins() -> Vec<RatioBin> {
    [(1.15, 1.28), (1.28, 1.43), (1.48, 1.65), (2.46, 2.71)]
        .into_iter()
        .map(|(lo, hi)| RatioBin { lo, hi })
        .collect()
}

/// Middle order statistic; even counts average the two middle values.
///
/// Panics on an empty slice or NaN input.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty list");
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("NaN in median input"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Default)]
struct SubjectIndex {
    order: Vec<String>,
    lookup: HashMap<String, usize>,
}

impl SubjectIndex {
    fn id(&mut self, subject: &str) -> usize {
        if let Some(&i) = self.lookup.get(subject) {
            return i;
        }
        let i = self.order.len();
        self.order.push(subject.to_string());
        self.lookup.insert(subject.to_string(), i);
        i
    }
}

pub fn aggregate_snarc(trials: &TrialTable) -> Result<SnarcDataset> {
    let mut index = SubjectIndex::default();
    let mut groups: BTreeMap<(usize, i64), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for rec in &trials.records {
        let Stimulus::Number(j) = rec.stimulus else {
            return Err(Error::InvalidConfig(
                "SNARC aggregation needs single-number trials".into(),
            ));
        };
        let hand = rec
            .hand
            .ok_or_else(|| Error::InvalidConfig("SNARC aggregation needs response hands".into()))?;
        let s = index.id(&rec.subject);
        let entry = groups.entry((s, j)).or_default();
        match hand {
            Hand::Left => entry.0.push(rec.rt_ms),
            Hand::Right => entry.1.push(rec.rt_ms),
        }
    }

    let mut cells = Vec::with_capacity(groups.len());
    for ((s, j), (left, right)) in groups {
        let missing = if left.is_empty() {
            Some("Left")
        } else if right.is_empty() {
            Some("Right")
        } else {
            None
        };
        if let Some(hand) = missing {
            return Err(Error::MissingCell {
                subject: index.order[s].clone(),
                stimulus: j,
                hand,
            });
        }
        cells.push(SnarcCell {
            subject: index.order[s].clone(),
            stimulus: j,
            drt: median(&right) - median(&left),
        });
    }
    Ok(SnarcDataset {
        cells,
        subjects: index.order,
    })
}

/// Returns the 1-based index of the bin holding `larger / smaller`.
pub fn bin_ratio(larger: f64, smaller: f64, bins: &[RatioBin]) -> Result<usize> {
    if !(smaller > 0.0 && larger > smaller) {
        return Err(Error::InvalidConfig(format!(
            "ratio needs larger > smaller > 0, got ({larger}, {smaller})"
        )));
    }
    let ratio = larger / smaller;
    bins.iter()
        .position(|b| ratio >= b.lo && ratio < b.hi)
        .map(|i| i + 1)
        .ok_or(Error::Unbinned { ratio })
}

fn validate_bins(bins: &[RatioBin]) -> Result<()> {
    if bins.is_empty() {
        return Err(Error::InvalidConfig("no ratio bins declared".into()));
    }
    for b in bins {
        if !(b.lo < b.hi) {
            return Err(Error::InvalidConfig(format!(
                "empty ratio bin [{}, {})",
                b.lo, b.hi
            )));
        }
    }
    for w in bins.windows(2) {
        if w[1].lo < w[0].hi {
            return Err(Error::InvalidConfig(
                "ratio bins must be ascending and disjoint".into(),
            ));
        }
    }
    Ok(())
}

pub fn aggregate_nde(trials: &TrialTable, bins: &[RatioBin]) -> Result<NdeDataset> {
    validate_bins(bins)?;
    let mut index = SubjectIndex::default();
    let mut groups: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for rec in &trials.records {
        let Stimulus::Pair { larger, smaller } = rec.stimulus else {
            return Err(Error::InvalidConfig(
                "NDE aggregation needs number-pair trials".into(),
            ));
        };
        let bin = bin_ratio(larger as f64, smaller as f64, bins)?;
        let s = index.id(&rec.subject);
        groups.entry((s, bin)).or_default().push(rec.rt_ms);
    }
    let cells = groups
        .into_iter()
        .map(|((s, bin), rts)| NdeCell {
            subject: index.order[s].clone(),
            bin,
            rt: median(&rts),
        })
        .collect();
    Ok(NdeDataset {
        cells,
        subjects: index.order,
        bins: bins.to_vec(),
    })
}

impl SnarcDataset {
    pub fn to_regression_data(&self) -> Result<RegressionData> {
        RegressionData::from_cells(self.cells.iter().map(|c| Cell {
            subject: c.subject.clone(),
            x: c.stimulus as f64,
            y: c.drt,
        }))
    }
}

impl NdeDataset {
    pub fn to_regression_data(&self) -> Result<RegressionData> {
        RegressionData::from_cells(self.cells.iter().map(|c| Cell {
            subject: c.subject.clone(),
            x: c.bin as f64,
            y: c.rt,
        }))
    }
}
