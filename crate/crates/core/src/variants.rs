//! Task-specific model variants, selectable by name.

use crate::dataset::{
    aggregate_nde, aggregate_snarc, default_ratio_bins, filter_trials, parse_trials, FilterStats,
    RatioBin, RegressionData, TaskKind, TrialTable,
};
use crate::error::Result;
use crate::model::{nde_spec_default, snarc_spec_default, ModelSpec};
use crate::registry::{Named, Registry};

/// A hierarchical-regression variant: its default priors and how raw trials
/// turn into per-subject cells.
pub trait ModelVariant: Named + Send + Sync {
    fn task_kind(&self) -> TaskKind;
    fn default_spec(&self) -> ModelSpec;
    fn default_rt_cutoff_ms(&self) -> f64;
    /// What the predictor `x` means, for reports.
    fn predictor_label(&self) -> &'static str;
    fn response_label(&self) -> &'static str;
    fn aggregate(&self, trials: &TrialTable) -> Result<RegressionData>;

    /// Parse, filter and aggregate a trial file.
    fn ingest_trials(
        &self,
        text: &str,
        rt_cutoff_ms: f64,
    ) -> Result<(RegressionData, FilterStats)> {
        let table = parse_trials(text, self.task_kind())?;
        let (kept, stats) = filter_trials(&table, rt_cutoff_ms);
        Ok((self.aggregate(&kept)?, stats))
    }
}

pub struct SnarcModel;

impl Named for SnarcModel {
    fn name(&self) -> &'static str {
        "snarc"
    }
}

impl ModelVariant for SnarcModel {
    fn task_kind(&self) -> TaskKind {
        TaskKind::Snarc
    }
    fn default_spec(&self) -> ModelSpec {
        snarc_spec_default()
    }
    fn default_rt_cutoff_ms(&self) -> f64 {
        3000.0
    }
    fn predictor_label(&self) -> &'static str {
        "stimulus number"
    }
    fn response_label(&self) -> &'static str {
        "dRT (ms)"
    }
    fn aggregate(&self, trials: &TrialTable) -> Result<RegressionData> {
        aggregate_snarc(trials)?.to_regression_data()
    }
}

pub struct NdeModel {
    pub bins: Vec<RatioBin>,
}

impl Default for NdeModel {
    fn default() -> Self {
        Self {
            bins: default_ratio_bins(),
        }
    }
}

impl Named for NdeModel {
    fn name(&self) -> &'static str {
        "nde"
    }
}

impl ModelVariant for NdeModel {
    fn task_kind(&self) -> TaskKind {
        TaskKind::Nde
    }
    fn default_spec(&self) -> ModelSpec {
        let mut spec = nde_spec_default();
        spec.predictor_values = (1..=self.bins.len()).map(|i| i as f64).collect();
        spec
    }
    fn default_rt_cutoff_ms(&self) -> f64 {
        5000.0
    }
    fn predictor_label(&self) -> &'static str {
        "ratio bin"
    }
    fn response_label(&self) -> &'static str {
        "RT (ms)"
    }
    fn aggregate(&self, trials: &TrialTable) -> Result<RegressionData> {
        aggregate_nde(trials, &self.bins)?.to_regression_data()
    }
}

pub type ModelRegistry = Registry<dyn ModelVariant>;

pub fn builtin_models() -> ModelRegistry {
    let mut reg = ModelRegistry::new("model");
    reg.register(Box::new(SnarcModel))
        .register(Box::new(NdeModel::default()));
    reg
}
