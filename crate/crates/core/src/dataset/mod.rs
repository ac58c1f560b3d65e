//! Trial ingestion, exclusion rules and per-cell aggregation.

mod aggregate;
mod cells;
mod trials;

pub use aggregate::{
    aggregate_nde, aggregate_snarc, bin_ratio, default_ratio_bins, median, NdeCell, NdeDataset,
    RatioBin, SnarcCell, SnarcDataset,
};
pub use cells::{parse_cells, Cell, Obs, RegressionData};
pub use trials::{
    filter_trials, parse_trials, FilterStats, Hand, Stimulus, TaskKind, TrialRecord, TrialTable,
};
