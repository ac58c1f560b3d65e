use std::collections::HashMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One aggregated observation: predictor `x` (stimulus number or bin index)
/// and response `y` (dRT or RT) for a subject.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub subject: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obs {
    pub x: f64,
    pub y: f64,
}

/// Cells grouped by subject, the form both the sampler and the classical
/// baseline consume. Subjects keep first-appearance order and each has at
/// least one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionData {
    subjects: Vec<String>,
    groups: Vec<Vec<Obs>>,
}

impl RegressionData {
    pub fn from_cells(cells: impl IntoIterator<Item = Cell>) -> Result<Self> {
        let mut subjects = Vec::new();
        let mut groups: Vec<Vec<Obs>> = Vec::new();
        let mut lookup: HashMap<String, usize> = HashMap::new();
        for c in cells {
            if !(c.x.is_finite() && c.y.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "non-finite cell for subject {}: ({}, {})",
                    c.subject, c.x, c.y
                )));
            }
            let i = *lookup.entry(c.subject.clone()).or_insert_with(|| {
                subjects.push(c.subject.clone());
                groups.push(Vec::new());
                subjects.len() - 1
            });
            if groups[i].iter().any(|o| o.x == c.x) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate cell for subject {} at x = {}",
                    c.subject, c.x
                )));
            }
            groups[i].push(Obs { x: c.x, y: c.y });
        }
        if subjects.is_empty() {
            return Err(Error::InvalidConfig("dataset has no cells".into()));
        }
        Ok(Self { subjects, groups })
    }

    /// Builds directly from per-subject `(x, y)` lists.
    pub fn from_groups(subjects: Vec<String>, groups: Vec<Vec<(f64, f64)>>) -> Result<Self> {
        if subjects.len() != groups.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} subject names for {} groups",
                subjects.len(),
                groups.len()
            )));
        }
        if groups.iter().any(Vec::is_empty) {
            return Err(Error::InvalidConfig(
                "every subject needs at least one cell".into(),
            ));
        }
        Self::from_cells(subjects.iter().zip(&groups).flat_map(|(s, g)| {
            g.iter().map(move |&(x, y)| Cell {
                subject: s.clone(),
                x,
                y,
            })
        }))
    }

    pub fn subjects(&self) -> &[String] {
        &self.subjects
    }

    pub fn n_subjects(&self) -> usize {
        self.subjects.len()
    }

    pub fn n_cells(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    pub fn subject_cells(&self, i: usize) -> &[Obs] {
        &self.groups[i]
    }

    pub fn groups(&self) -> &[Vec<Obs>] {
        &self.groups
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.subjects.iter().zip(&self.groups).flat_map(|(s, g)| {
            g.iter().map(move |o| Cell {
                subject: s.clone(),
                x: o.x,
                y: o.y,
            })
        })
    }

    /// Returns the same data with subjects listed in `order`.
    pub fn permute_subjects(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.n_subjects()];
        if order.len() != seen.len()
            || order
                .iter()
                .any(|&i| i >= seen.len() || std::mem::replace(&mut seen[i], true))
        {
            return Err(Error::DimensionMismatch(
                "not a permutation of subjects".into(),
            ));
        }
        Ok(Self {
            subjects: order.iter().map(|&i| self.subjects[i].clone()).collect(),
            groups: order.iter().map(|&i| self.groups[i].clone()).collect(),
        })
    }

    /// Serializes to the `subject,x,y` cell format.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("subject,x,y\n");
        for c in self.cells() {
            let _ = writeln!(out, "{},{},{}", c.subject, c.x, c.y);
        }
        out
    }

    /// Short content hash of the cell table.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_csv().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Parses the `subject,x,y` cell format.
pub fn parse_cells(text: &str) -> Result<RegressionData> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut cells = Vec::new();
    let mut saw_header = false;
    for row in reader.records() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let perr = |message: String| Error::Parse { line, message };
        if !saw_header {
            if row.iter().collect::<Vec<_>>() != ["subject", "x", "y"] {
                return Err(perr("expected header 'subject,x,y'".into()));
            }
            saw_header = true;
            continue;
        }
        if row.len() == 1 && row[0].is_empty() {
            continue;
        }
        if row.len() != 3 {
            return Err(perr(format!("expected 3 columns, found {}", row.len())));
        }
        let num = |k: usize, name: &str| {
            row[k]
                .parse::<f64>()
                .map_err(|_| perr(format!("cannot parse {name} value '{}'", &row[k])))
        };
        cells.push(Cell {
            subject: row[0].to_string(),
            x: num(1, "x")?,
            y: num(2, "y")?,
        });
    }
    if !saw_header {
        return Err(Error::Parse {
            line: 1,
            message: "missing header".into(),
        });
    }
    RegressionData::from_cells(cells)
}
