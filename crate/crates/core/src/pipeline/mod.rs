//! Declarative pipeline specs and their executor.
//!
//! A spec is a JSON document naming a task, a model family, the split, the
//! explainer and the metric settings. [`parse_spec`] validates it in full and
//! resolves defaults; [`run_pipeline`] executes the stages in order
//! (load, split, fit, predict, score, explain) and is deterministic given
//! the spec.

mod bench;
mod spec;
mod validate;

use std::path::Path;
use std::time::Instant;

use ndarray::Axis;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datasets::{generate_alertness, load_labeled_csv, load_yeast_csv, train_test_split, TabularDataset, TaskKind};
use crate::metrics::{classification_metrics, explainability_report, ExplainabilityReport, PerformanceReport};
use crate::models::{fit_model, Classifier, ModelFamily};
use crate::shap::{explain_batch, BackgroundSet};

pub use bench::{builtin_suite, run_benchmark, BenchmarkReport, BenchmarkRow, OutputFormat};
pub use spec::*;
pub use validate::{parse_spec, parse_spec_value, serialize_spec, SpecErrors, ValidationError};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Process exit codes shared by the command-line tools.
pub mod exit_code {
    pub const OK: i32 = 0;
    pub const RUNTIME: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const PARTIAL: i32 = 3;
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid spec:\n{0}")]
    Validation(#[from] SpecErrors),
    #[error("stage {stage} failed: {message}")]
    Stage { stage: &'static str, message: String },
    #[error("benchmark suite is empty")]
    EmptySuite,
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Validation(_) | PipelineError::EmptySuite => exit_code::VALIDATION,
            PipelineError::Stage { .. } => exit_code::RUNTIME,
        }
    }
}

fn stage<E: std::fmt::Display>(stage: &'static str) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError::Stage { stage, message: e.to_string() }
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub load: f64,
    pub split: f64,
    pub fit: f64,
    pub predict: f64,
    pub explain: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub spec_hash: String,
    pub artifact_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n_train: usize,
    pub n_test: usize,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub task_kind: TaskKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub spec: PipelineSpec,
    /// Family as trained, e.g. `ovr(random_forest)`.
    pub model: String,
    pub dataset: DatasetSummary,
    pub performance: PerformanceReport,
    pub explainability: Option<ExplainabilityReport>,
    /// Set instead of `explainability` when the explain stage failed.
    pub explainability_error: Option<String>,
    pub timings: StageTimings,
    pub provenance: Provenance,
}

impl RunReport {
    /// The report with timings zeroed, for determinism comparisons.
    pub fn without_timings(&self) -> RunReport {
        RunReport { timings: StageTimings::default(), ..self.clone() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable summary.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} / {} / {} (spec {})\n",
            self.spec.source,
            self.spec.task.display_name(),
            self.model,
            &self.provenance.spec_hash[..12]
        );
        out.push_str(&format!("train {} rows, test {} rows\n\n", self.dataset.n_train, self.dataset.n_test));
        out.push_str(&self.performance.to_text(&self.dataset.class_names));
        out.push('\n');
        match (&self.explainability, &self.explainability_error) {
            (Some(e), _) => out.push_str(&format!(
                "shap fidelity {:.5}  sparsity {:.2}  (tau {}, {} rows, {})\n",
                e.fidelity_mse,
                e.sparsity_avg,
                e.tau,
                e.n_explained,
                self.spec.explainer.method.as_str()
            )),
            (None, Some(err)) => out.push_str(&format!("explainability failed: {err}\n")),
            (None, None) => {}
        }
        out
    }

    pub fn has_failures(&self) -> bool {
        self.explainability_error.is_some()
    }
}

fn load_dataset(task: &TaskSpec) -> Result<TabularDataset, PipelineError> {
    let load = stage("load");
    match task {
        TaskSpec::BinaryAlertness { .. } => generate_alertness(&task.alertness_config().expect("alertness task")).map_err(load),
        TaskSpec::YeastMulticlass { path } => load_yeast_csv(Path::new(path)).map_err(load),
        TaskSpec::CustomCsv { path, label_column } => load_labeled_csv(Path::new(path), label_column.as_deref()).map_err(load),
    }
}

/// Runs every stage of `spec`.
pub fn run_pipeline(spec: &PipelineSpec) -> Result<RunReport, PipelineError> {
    let start = Instant::now();
    let mut timings = StageTimings::default();
    let mut lap = Instant::now();
    let mut tick = |slot: &mut f64| {
        *slot = lap.elapsed().as_secs_f64();
        lap = Instant::now();
    };

    let data = load_dataset(&spec.task)?;
    tick(&mut timings.load);
    log::info!("loaded {} rows, {} features, {} classes", data.n_samples(), data.n_features(), data.n_classes());

    let (train, test) = train_test_split(&data, spec.split.test_fraction, spec.split.seed).map_err(stage("split"))?;
    tick(&mut timings.split);

    if data.task_kind == TaskKind::Multiclass && spec.model.family.is_tree_based() && !spec.model.ovr {
        return Err(PipelineError::Stage {
            stage: "fit",
            message: format!("{} on a multiclass task requires ovr = true", spec.model.family.as_str()),
        });
    }
    let model = fit_model(&spec.model.hyperparameters, &train, spec.model.seed, spec.model.ovr).map_err(stage("fit"))?;
    tick(&mut timings.fit);
    log::info!("fitted {}", model.family_name());

    let pred = model.predict(&test.x).map_err(stage("predict"))?;
    let performance =
        classification_metrics(&test.y, &pred, data.n_classes(), spec.metrics.averaging).map_err(stage("metrics"))?;
    tick(&mut timings.predict);

    let explained = explain(spec, &model, &train, &test);
    tick(&mut timings.explain);
    let (explainability, explainability_error) = match explained {
        Ok(r) => (Some(r), None),
        Err(e) => {
            log::warn!("explain stage failed: {e}");
            (None, Some(e.to_string()))
        }
    };
    timings.total = start.elapsed().as_secs_f64();

    Ok(RunReport {
        spec: spec.clone(),
        model: model.family_name(),
        dataset: DatasetSummary {
            n_train: train.n_samples(),
            n_test: test.n_samples(),
            feature_names: data.feature_names.clone(),
            class_names: data.class_names.clone(),
            task_kind: data.task_kind,
        },
        performance,
        explainability,
        explainability_error,
        timings,
        provenance: Provenance { spec_hash: spec.spec_hash(), artifact_version: ARTIFACT_VERSION.into() },
    })
}

fn explain(
    spec: &PipelineSpec,
    model: &crate::models::Model,
    train: &TabularDataset,
    test: &TabularDataset,
) -> Result<ExplainabilityReport, PipelineError> {
    let cfg = spec.explainer.config();
    let background = BackgroundSet::sample(&train.x, cfg.background_size, cfg.seed).map_err(stage("explain"))?;
    let rows = eval_rows(test.n_samples(), spec.explainer.eval_sample);
    let x_eval = test.x.select(Axis(0), &rows);
    let attributions = explain_batch(model, &x_eval, &background, &cfg, &train.feature_names).map_err(stage("explain"))?;
    explainability_report(&attributions, spec.metrics.tau).map_err(stage("explain"))
}

/// Test-row indices explained: `min(size, n)` rows from a seeded shuffle.
pub fn eval_rows(n_test: usize, sample: EvalSample) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n_test).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(sample.seed));
    idx.truncate(sample.size);
    idx
}

/// Family display used in report tables.
pub fn family_label(family: ModelFamily, ovr: bool) -> String {
    if ovr {
        format!("{} (OvR)", family.display_name())
    } else {
        family.display_name().to_string()
    }
}
