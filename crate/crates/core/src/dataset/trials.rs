use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Snarc,
    Nde,
}

impl TaskKind {
    pub fn header(self) -> [&'static str; 5] {
        match self {
            TaskKind::Snarc => ["subject", "stimulus", "hand", "rt_ms", "error"],
            TaskKind::Nde => ["subject", "larger", "smaller", "rt_ms", "error"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Hand {
    Left,
    Right,
}

impl Hand {
    pub fn flipped(self) -> Hand {
        match self {
            Hand::Left => Hand::Right,
            Hand::Right => Hand::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stimulus {
    /// The presented digit in a parity task.
    Number(i64),
    /// The two numerals in a magnitude comparison.
    Pair { larger: u32, smaller: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub subject: String,
    pub stimulus: Stimulus,
    /// Present for parity (SNARC) trials only.
    pub hand: Option<Hand>,
    pub rt_ms: f64,
    pub is_error: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialTable {
    pub kind: TaskKind,
    pub records: Vec<TrialRecord>,
}

impl TrialTable {
    pub fn new(kind: TaskKind) -> Self {
        Self {
            kind,
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterStats {
    pub total: usize,
    pub removed_errors: usize,
    pub removed_slow: usize,
    pub retained: usize,
    pub exclusion_fraction: f64,
}

fn parse_err(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(field: &str, column: &str, line: u64) -> Result<T> {
    field
        .parse()
        .map_err(|_| parse_err(line, format!("cannot parse {column} value '{field}'")))
}

/// Parses a comma-separated trial file. The header must match the task's
/// column layout exactly; data rows keep their file order.
pub fn parse_trials(text: &str, kind: TaskKind) -> Result<TrialTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let expected = kind.header();
    let mut table = TrialTable::new(kind);
    let mut saw_header = false;

    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if !saw_header {
            let got: Vec<&str> = row.iter().collect();
            if got != expected {
                return Err(parse_err(
                    line,
                    format!(
                        "expected header '{}', found '{}'",
                        expected.join(","),
                        got.join(",")
                    ),
                ));
            }
            saw_header = true;
            continue;
        }
        if row.len() == 1 && row[0].is_empty() {
            continue;
        }
        if row.len() != expected.len() {
            return Err(parse_err(
                line,
                format!("expected {} columns, found {}", expected.len(), row.len()),
            ));
        }

        let subject = row[0].to_string();
        if subject.is_empty() {
            return Err(parse_err(line, "empty subject id"));
        }
        let rt_ms: f64 = parse_num(&row[3], "rt_ms", line)?;
        if !(rt_ms.is_finite() && rt_ms > 0.0) {
            return Err(parse_err(
                line,
                format!("rt_ms must be positive, got {rt_ms}"),
            ));
        }
        let is_error = match &row[4] {
            "0" => false,
            "1" => true,
            other => {
                return Err(parse_err(
                    line,
                    format!("error flag must be 0 or 1, got '{other}'"),
                ))
            }
        };

        let (stimulus, hand) = match kind {
            TaskKind::Snarc => {
                let number: i64 = parse_num(&row[1], "stimulus", line)?;
                let hand = match &row[2] {
                    "L" | "l" => Hand::Left,
                    "R" | "r" => Hand::Right,
                    other => return Err(parse_err(line, format!("unknown hand code '{other}'"))),
                };
                (Stimulus::Number(number), Some(hand))
            }
            TaskKind::Nde => {
                let larger: u32 = parse_num(&row[1], "larger", line)?;
                let smaller: u32 = parse_num(&row[2], "smaller", line)?;
                if smaller < 1 || larger <= smaller {
                    return Err(parse_err(
                        line,
                        format!(
                            "pair must satisfy larger > smaller >= 1, got ({larger}, {smaller})"
                        ),
                    ));
                }
                (Stimulus::Pair { larger, smaller }, None)
            }
        };

        table.records.push(TrialRecord {
            subject,
            stimulus,
            hand,
            rt_ms,
            is_error,
        });
    }

    if !saw_header {
        return Err(parse_err(1, "missing header"));
    }
    Ok(table)
}

/// Drops error trials, then trials slower than `rt_cutoff_ms` (strictly
/// greater). A trial exactly at the cutoff is kept.
pub fn filter_trials(trials: &TrialTable, rt_cutoff_ms: f64) -> (TrialTable, FilterStats) {
    let total = trials.records.len();
    let mut removed_errors = 0;
    let mut removed_slow = 0;
    let mut kept = Vec::with_capacity(total);
    for rec in &trials.records {
        if rec.is_error {
            removed_errors += 1;
        } else if rec.rt_ms > rt_cutoff_ms {
            removed_slow += 1;
        } else {
            kept.push(rec.clone());
        }
    }
    let retained = kept.len();
    let exclusion_fraction = if total == 0 {
        0.0
    } else {
        (removed_errors + removed_slow) as f64 / total as f64
    };
    (
        TrialTable {
            kind: trials.kind,
            records: kept,
        },
        FilterStats {
            total,
            removed_errors,
            removed_slow,
            retained,
            exclusion_fraction,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const SNARC_HEADER: &str = "subject,stimulus,hand,rt_ms,error\n";

    #[test]
    fn parses_snarc_row() {
        let t = parse_trials(&format!("{SNARC_HEADER}s01,8,R,512,0\n"), TaskKind::Snarc).unwrap();
        assert_eq!(
            t.records,
            vec![TrialRecord {
                subject: "s01".into(),
                stimulus: Stimulus::Number(8),
                hand: Some(Hand::Right),
                rt_ms: 512.0,
                is_error: false,
            }]
        );
    }

    #[test]
    fn parses_nde_row() {
        let t = parse_trials(
            "subject,larger,smaller,rt_ms,error\nk7,9,7,830.5,1\n",
            TaskKind::Nde,
        )
        .unwrap();
        assert_eq!(
            t.records[0].stimulus,
            Stimulus::Pair {
                larger: 9,
                smaller: 7
            }
        );
        assert!(t.records[0].is_error);
        assert_eq!(t.records[0].hand, None);
    }

    #[test]
    fn bad_rt_reports_line() {
        let text = format!("{SNARC_HEADER}s01,8,R,512,0\ns01,9,L,abc,0\n");
        match parse_trials(&text, TaskKind::Snarc) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("rt_ms"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_column_count_and_hand_code() {
        let e = parse_trials(&format!("{SNARC_HEADER}s01,8,R,512\n"), TaskKind::Snarc).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let e =
            parse_trials(&format!("{SNARC_HEADER}s01,8,X,512,0\n"), TaskKind::Snarc).unwrap_err();
        assert!(e.to_string().contains("hand"));
    }

    #[test]
    fn invalid_pair_rejected() {
        let e = parse_trials(
            "subject,larger,smaller,rt_ms,error\na,5,5,700,0\n",
            TaskKind::Nde,
        )
        .unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn header_only_gives_empty_table() {
        let t = parse_trials(SNARC_HEADER, TaskKind::Snarc).unwrap();
        assert!(t.is_empty());
        assert!(parse_trials("", TaskKind::Snarc).is_err());
        assert!(parse_trials("subject,larger,smaller,rt_ms,error\n", TaskKind::Snarc).is_err());
    }

    fn rec(rt: f64, err: bool) -> TrialRecord {
        TrialRecord {
            subject: "s".into(),
            stimulus: Stimulus::Number(1),
            hand: Some(Hand::Left),
            rt_ms: rt,
            is_error: err,
        }
    }

    #[test]
    fn filter_counts_errors_before_slow() {
        let table = TrialTable {
            kind: TaskKind::Snarc,
            records: vec![
                rec(4000.0, true),
                rec(4000.0, false),
                rec(3000.0, false),
                rec(500.0, false),
            ],
        };
        let (kept, stats) = filter_trials(&table, 3000.0);
        assert_eq!(stats.removed_errors, 1);
        assert_eq!(stats.removed_slow, 1);
        assert_eq!(stats.retained, 2);
        assert_eq!(kept.records[0].rt_ms, 3000.0);
        assert!((stats.exclusion_fraction - 0.5).abs() < 1e-15);
    }

    #[test]
    fn filter_identity_and_empty() {
        let table = TrialTable {
            kind: TaskKind::Snarc,
            records: vec![rec(400.0, false), rec(900.0, false)],
        };
        let (kept, stats) = filter_trials(&table, 3000.0);
        assert_eq!(kept, table);
        assert_eq!(stats.exclusion_fraction, 0.0);

        let (kept, stats) = filter_trials(&TrialTable::new(TaskKind::Nde), 5000.0);
        assert!(kept.is_empty());
        assert_eq!((stats.total, stats.retained), (0, 0));
    }
}
