use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datasets::{AlertnessGenConfig, TaskKind};
use crate::metrics::Averaging;
use crate::models::{FamilyParams, ModelFamily};
use crate::shap::{ExplainMethod, ExplainerConfig, KernelBudget, Target};

pub const SPEC_VERSION: u32 = 1;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_EVAL_SAMPLE: usize = 200;
pub const DEFAULT_YEAST_PATH: &str = "yeast.csv";

/// Declarative description of one train/evaluate/explain run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSpec {
    pub spec_version: u32,
    /// Who authored the spec; the first column of benchmark tables.
    pub source: String,
    pub task: TaskSpec,
    pub split: SplitSpec,
    pub model: ModelSpec,
    pub explainer: ExplainerSpec,
    pub metrics: MetricsSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskSpec {
    BinaryAlertness { n: usize, seed: u64, hr_band_low: u32, hr_band_high: u32 },
    YeastMulticlass { path: String },
    /// Binary or multiclass depending on the file's label count.
    CustomCsv { path: String, label_column: Option<String> },
}

impl TaskSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            TaskSpec::BinaryAlertness { .. } => "binary_alertness",
            TaskSpec::YeastMulticlass { .. } => "yeast_multiclass",
            TaskSpec::CustomCsv { .. } => "custom_csv",
        }
    }

    /// Short label used in report tables.
    pub fn display_name(&self) -> &'static str {
        match self {
            TaskSpec::BinaryAlertness { .. } => "alertness",
            TaskSpec::YeastMulticlass { .. } => "yeast",
            TaskSpec::CustomCsv { .. } => "custom",
        }
    }

    /// Known before loading data, except for custom files.
    pub fn known_kind(&self) -> Option<TaskKind> {
        match self {
            TaskSpec::BinaryAlertness { .. } => Some(TaskKind::Binary),
            TaskSpec::YeastMulticlass { .. } => Some(TaskKind::Multiclass),
            TaskSpec::CustomCsv { .. } => None,
        }
    }

    pub fn known_features(&self) -> Option<usize> {
        match self {
            TaskSpec::BinaryAlertness { .. } => Some(4),
            TaskSpec::YeastMulticlass { .. } => Some(8),
            TaskSpec::CustomCsv { .. } => None,
        }
    }

    pub fn alertness_config(&self) -> Option<AlertnessGenConfig> {
        match *self {
            TaskSpec::BinaryAlertness { n, seed, hr_band_low, hr_band_high } => {
                Some(AlertnessGenConfig { n, seed, hr_band_low, hr_band_high })
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: ModelFamily,
    pub hyperparameters: FamilyParams,
    pub seed: u64,
    pub ovr: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSample {
    pub size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplainerSpec {
    pub method: ExplainMethod,
    pub background_size: usize,
    pub kernel_budget: KernelBudget,
    pub target: Target,
    pub seed: u64,
    pub eval_sample: EvalSample,
}

impl ExplainerSpec {
    pub fn config(&self) -> ExplainerConfig {
        ExplainerConfig {
            method: self.method,
            background_size: self.background_size,
            kernel_budget: self.kernel_budget,
            target: self.target,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSpec {
    pub averaging: Averaging,
    pub tau: f64,
}

/// Tree explainer for tree families, full-enumeration KernelSHAP otherwise.
pub fn default_method(family: ModelFamily) -> ExplainMethod {
    if family.is_tree_based() {
        ExplainMethod::Tree
    } else {
        ExplainMethod::Kernel
    }
}

pub fn default_target(kind: Option<TaskKind>) -> Target {
    match kind {
        Some(TaskKind::Binary) => Target::PositiveClassProb,
        _ => Target::PredictedClassProb,
    }
}

pub fn default_averaging(kind: Option<TaskKind>) -> Averaging {
    match kind {
        Some(TaskKind::Binary) => Averaging::BinaryPositive,
        _ => Averaging::Weighted,
    }
}

/// Multiclass tree families need one-vs-rest; custom files may be either kind.
pub fn default_ovr(kind: Option<TaskKind>, family: ModelFamily) -> bool {
    match kind {
        Some(TaskKind::Binary) => false,
        Some(TaskKind::Multiclass) | None => family.is_tree_based(),
    }
}

impl PipelineSpec {
    /// A spec with every default resolved for `task` and `family`.
    pub fn with_defaults(task: TaskSpec, family: ModelFamily) -> Self {
        let kind = task.known_kind();
        PipelineSpec {
            spec_version: SPEC_VERSION,
            source: "baseline".into(),
            split: SplitSpec { test_fraction: 0.2, seed: DEFAULT_SEED },
            model: ModelSpec {
                family,
                hyperparameters: FamilyParams::default_for(family),
                seed: DEFAULT_SEED,
                ovr: default_ovr(kind, family),
            },
            explainer: ExplainerSpec {
                method: default_method(family),
                background_size: 100,
                kernel_budget: KernelBudget::Full,
                target: default_target(kind),
                seed: DEFAULT_SEED,
                eval_sample: EvalSample { size: DEFAULT_EVAL_SAMPLE, seed: DEFAULT_SEED },
            },
            metrics: MetricsSpec { averaging: default_averaging(kind), tau: crate::metrics::DEFAULT_TAU },
            task,
        }
    }

    pub fn alertness_task() -> TaskSpec {
        let c = AlertnessGenConfig::default();
        TaskSpec::BinaryAlertness { n: c.n, seed: c.seed, hr_band_low: c.hr_band_low, hr_band_high: c.hr_band_high }
    }

    pub fn yeast_task(path: impl Into<String>) -> TaskSpec {
        TaskSpec::YeastMulticlass { path: path.into() }
    }

    /// Sorted-key JSON with every default explicit.
    pub fn canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("spec serializes");
        serde_json::to_string(&sort_keys(value)).expect("value serializes")
    }

    pub fn pretty_json(&self) -> String {
        let value = serde_json::to_value(self).expect("spec serializes");
        serde_json::to_string_pretty(&sort_keys(value)).expect("value serializes")
    }

    /// Hex SHA-256 of [`PipelineSpec::canonical_json`].
    pub fn spec_hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

/// Rebuilds objects with lexicographically ordered keys.
pub(crate) fn sort_keys(value: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, sort_keys(v))).collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sort_keys).collect()),
        other => other,
    }
}
