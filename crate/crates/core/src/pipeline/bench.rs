use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{exit_code, family_label, run_pipeline, PipelineError, PipelineSpec, RunReport};
use crate::models::ModelFamily;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Md,
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "md" => Ok(OutputFormat::Md),
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format {other:?}; expected md, csv or json")),
        }
    }
}

/// One suite entry; exactly one of `report` and `error` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub source: String,
    pub task: String,
    pub model: String,
    pub report: Option<RunReport>,
    pub error: Option<String>,
}

impl BenchmarkRow {
    pub fn new(spec: &PipelineSpec, result: Result<RunReport, PipelineError>) -> Self {
        let (report, error) = match result {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
        Self {
            source: spec.source.clone(),
            task: spec.task.display_name().into(),
            model: family_label(spec.model.family, spec.model.ovr),
            report,
            error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<BenchmarkRow>,
}

/// `{RF, GBT, MLP} x {alertness, yeast}` with default settings.
pub fn builtin_suite(yeast_path: &str) -> Vec<PipelineSpec> {
    let mut suite = Vec::new();
    for task in [PipelineSpec::alertness_task(), PipelineSpec::yeast_task(yeast_path)] {
        for family in ModelFamily::ALL {
            suite.push(PipelineSpec::with_defaults(task.clone(), family));
        }
    }
    suite
}

/// Runs every spec (in parallel); failed runs become error rows.
pub fn run_benchmark(suite: &[PipelineSpec]) -> Result<BenchmarkReport, PipelineError> {
    if suite.is_empty() {
        return Err(PipelineError::EmptySuite);
    }
    let rows = suite
        .par_iter()
        .map(|spec| {
            let result = run_pipeline(spec);
            if let Err(e) = &result {
                log::warn!("{} / {}: {e}", spec.task.display_name(), spec.model.family.as_str());
            }
            BenchmarkRow::new(spec, result)
        })
        .collect();
    Ok(BenchmarkReport { rows })
}

fn fmt4(v: f64) -> String {
    format!("{v:.4}")
}

impl BenchmarkReport {
    pub fn n_failed(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some() || r.report.as_ref().is_some_and(RunReport::has_failures)).count()
    }

    pub fn exit_code(&self) -> i32 {
        if self.n_failed() == 0 {
            exit_code::OK
        } else {
            exit_code::PARTIAL
        }
    }

    fn first_error(row: &BenchmarkRow) -> String {
        let msg = row.error.as_deref().unwrap_or("failed");
        format!("ERROR: {}", msg.lines().next().unwrap_or(msg))
    }

    /// Source, task, model, accuracy, precision, recall, F1.
    pub fn performance_rows(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        let headers = vec!["source", "task", "model", "accuracy", "precision", "recall", "f1", "averaging"];
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut cells = vec![row.source.clone(), row.task.clone(), row.model.clone()];
                match &row.report {
                    Some(r) => {
                        let p = &r.performance;
                        cells.extend([fmt4(p.accuracy), fmt4(p.precision), fmt4(p.recall), fmt4(p.f1)]);
                        cells.push(p.averaging.as_str().into());
                    }
                    None => {
                        cells.push(Self::first_error(row));
                        cells.extend(std::iter::repeat_n(String::new(), 4));
                    }
                }
                cells
            })
            .collect();
        (headers, rows)
    }

    /// Source, task, model, fidelity, sparsity, tau, explained rows.
    pub fn explainability_rows(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        let headers = vec!["source", "task", "model", "shap_fidelity", "shap_sparsity", "tau", "n_explained", "method"];
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut cells = vec![row.source.clone(), row.task.clone(), row.model.clone()];
                match (&row.report, row.report.as_ref().and_then(|r| r.explainability.as_ref())) {
                    (Some(r), Some(e)) => cells.extend([
                        format!("{:.5}", e.fidelity_mse),
                        format!("{:.2}", e.sparsity_avg),
                        e.tau.to_string(),
                        e.n_explained.to_string(),
                        r.spec.explainer.method.as_str().into(),
                    ]),
                    (Some(r), None) => {
                        let msg = r.explainability_error.as_deref().unwrap_or("failed");
                        cells.push(format!("ERROR: {msg}"));
                        cells.extend(std::iter::repeat_n(String::new(), 4));
                    }
                    (None, _) => {
                        cells.push(Self::first_error(row));
                        cells.extend(std::iter::repeat_n(String::new(), 4));
                    }
                }
                cells
            })
            .collect();
        (headers, rows)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("benchmark serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Both tables in `format`; JSON is the full machine-readable report.
    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => self.to_json(),
            OutputFormat::Md => {
                let (h1, r1) = self.performance_rows();
                let (h2, r2) = self.explainability_rows();
                format!("## Performance\n\n{}\n## Explainability\n\n{}", markdown(&h1, &r1), markdown(&h2, &r2))
            }
            OutputFormat::Csv => {
                let (h1, r1) = self.performance_rows();
                let (h2, r2) = self.explainability_rows();
                format!("{}\n{}", csv_table(&h1, &r1), csv_table(&h2, &r2))
            }
        }
    }
}

fn markdown(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = format!("| {} |\n", headers.join(" | "));
    out.push_str(&format!("|{}\n", headers.iter().map(|_| "---|").collect::<String>()));
    for row in rows {
        out.push_str(&format!("| {} |\n", row.iter().map(|c| c.replace('|', "\\|")).collect::<Vec<_>>().join(" | ")));
    }
    out
}

fn csv_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(headers).expect("in-memory csv");
    for row in rows {
        w.write_record(row).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{FamilyParams, GbtParams, MlpParams, RfParams};
    use crate::pipeline::TaskSpec;

    fn tiny_suite() -> Vec<PipelineSpec> {
        let task = TaskSpec::BinaryAlertness { n: 600, seed: 2, hr_band_low: 60, hr_band_high: 100 };
        let mut suite: Vec<PipelineSpec> =
            ModelFamily::ALL.iter().map(|&f| PipelineSpec::with_defaults(task.clone(), f)).collect();
        suite[0].model.hyperparameters = FamilyParams::RandomForest(RfParams { n_trees: 5, ..Default::default() });
        suite[1].model.hyperparameters = FamilyParams::Gbt(GbtParams { n_rounds: 10, ..Default::default() });
        suite[2].model.hyperparameters = FamilyParams::Mlp(MlpParams { epochs: 2, ..Default::default() });
        for s in &mut suite {
            s.explainer.eval_sample.size = 10;
        }
        suite
    }

    #[test]
    fn builtin_suite_shape() {
        let s = builtin_suite("data/yeast.csv");
        assert_eq!(s.len(), 6);
        assert_eq!(s.iter().filter(|p| matches!(p.task, TaskSpec::YeastMulticlass { .. })).count(), 3);
    }

    #[test]
    fn empty_suite_is_an_error() {
        assert!(matches!(run_benchmark(&[]), Err(PipelineError::EmptySuite)));
    }

    #[test]
    fn failures_become_rows_and_json_round_trips() {
        let mut suite = tiny_suite();
        suite.push(PipelineSpec::with_defaults(PipelineSpec::yeast_task("/missing/yeast.csv"), ModelFamily::Gbt));
        let report = run_benchmark(&suite).unwrap();
        assert_eq!(report.rows.len(), 4);
        assert_eq!(report.n_failed(), 1);
        assert_eq!(report.exit_code(), exit_code::PARTIAL);
        assert!(report.rows[3].error.as_deref().unwrap().contains("load"));
        assert_eq!(BenchmarkReport::from_json(&report.to_json()).unwrap(), report);

        let md = report.render(OutputFormat::Md);
        assert_eq!(md.matches("| baseline |").count(), 8);
        assert!(md.contains("ERROR: stage load failed"));
        let csv = report.render(OutputFormat::Csv);
        assert!(csv.starts_with("source,task,model,accuracy"));
    }

    #[test]
    fn parallel_equals_sequential() {
        let suite = tiny_suite();
        let par = run_benchmark(&suite).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let seq = pool.install(|| run_benchmark(&suite).unwrap());
        let strip = |r: &BenchmarkReport| r.rows.iter().map(|row| row.report.as_ref().map(RunReport::without_timings)).collect::<Vec<_>>();
        assert_eq!(strip(&par), strip(&seq));
    }
}
