//! Classification metrics and the two explanation-quality scores: fidelity
//! (mean squared gap between `f(x)` and `phi0 + sum(phi)`) and sparsity
//! (mean count of attributions above a threshold).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::shap::Attribution;

pub const DEFAULT_TAU: f64 = 1e-3;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("cannot score an empty set")]
    Empty,
    #[error("y_true has {0} entries but y_pred has {1}")]
    LengthMismatch(usize, usize),
    #[error("label {0} out of range for {1} classes")]
    BadLabel(usize, usize),
    #[error("binary averaging needs exactly 2 classes, got {0}")]
    NotBinary(usize),
    #[error("tau must be finite and non-negative, got {0}")]
    BadTau(f64),
}

pub type Result<T> = std::result::Result<T, MetricsError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    /// Scores of class 1 only.
    BinaryPositive,
    /// Per-class scores weighted by true-class support.
    Weighted,
    /// Unweighted mean over classes seen in either labelling.
    Macro,
}

impl Averaging {
    pub fn as_str(self) -> &'static str {
        match self {
            Averaging::BinaryPositive => "binary_positive",
            Averaging::Weighted => "weighted",
            Averaging::Macro => "macro",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub class: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of true instances.
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub averaging: Averaging,
    pub per_class: Vec<ClassScores>,
}

/// Ratio with `0/0 = 0`.
fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn classification_metrics(
    y_true: &[usize],
    y_pred: &[usize],
    n_classes: usize,
    averaging: Averaging,
) -> Result<PerformanceReport> {
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::LengthMismatch(y_true.len(), y_pred.len()));
    }
    if y_true.is_empty() {
        return Err(MetricsError::Empty);
    }
    if let Some(&bad) = y_true.iter().chain(y_pred).find(|&&c| c >= n_classes) {
        return Err(MetricsError::BadLabel(bad, n_classes));
    }
    if averaging == Averaging::BinaryPositive && n_classes != 2 {
        return Err(MetricsError::NotBinary(n_classes));
    }
    let n = y_true.len();
    let mut tp = vec![0usize; n_classes];
    let mut predicted = vec![0usize; n_classes];
    let mut support = vec![0usize; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        support[t] += 1;
        predicted[p] += 1;
        if t == p {
            tp[t] += 1;
        }
    }
    let per_class: Vec<ClassScores> = (0..n_classes)
        .map(|c| {
            let precision = ratio(tp[c], predicted[c]);
            let recall = ratio(tp[c], support[c]);
            ClassScores { class: c, precision, recall, f1: harmonic(precision, recall), support: support[c] }
        })
        .collect();
    let accuracy = ratio(tp.iter().sum(), n);

    let (precision, recall, f1) = match averaging {
        Averaging::BinaryPositive => {
            let c = &per_class[1];
            (c.precision, c.recall, c.f1)
        }
        Averaging::Weighted => per_class.iter().fold((0.0, 0.0, 0.0), |(p, r, f), c| {
            let w = c.support as f64 / n as f64;
            (p + w * c.precision, r + w * c.recall, f + w * c.f1)
        }),
        Averaging::Macro => {
            let seen: Vec<&ClassScores> = per_class.iter().filter(|c| support[c.class] + predicted[c.class] > 0).collect();
            let k = seen.len() as f64;
            let sum = seen.iter().fold((0.0, 0.0, 0.0), |(p, r, f), c| (p + c.precision, r + c.recall, f + c.f1));
            (sum.0 / k, sum.1 / k, sum.2 / k)
        }
    };
    Ok(PerformanceReport { accuracy, precision, recall, f1, averaging, per_class })
}

/// Mean over rows of `(fx - (phi0 + sum(phi)))^2`.
pub fn shap_fidelity(attributions: &[Attribution]) -> Result<f64> {
    if attributions.is_empty() {
        return Err(MetricsError::Empty);
    }
    let total: f64 = attributions.iter().map(|a| (a.fx - a.surrogate()).powi(2)).sum();
    Ok(total / attributions.len() as f64)
}

/// Mean over rows of `|{i : |phi_i| > tau}|`.
pub fn shap_sparsity(attributions: &[Attribution], tau: f64) -> Result<f64> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(MetricsError::BadTau(tau));
    }
    if attributions.is_empty() {
        return Err(MetricsError::Empty);
    }
    let total: usize = attributions.iter().map(|a| a.phi.iter().filter(|p| p.abs() > tau).count()).sum();
    Ok(total as f64 / attributions.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainabilityReport {
    pub fidelity_mse: f64,
    pub sparsity_avg: f64,
    pub tau: f64,
    pub n_explained: usize,
    pub n_features: usize,
}

pub fn explainability_report(attributions: &[Attribution], tau: f64) -> Result<ExplainabilityReport> {
    Ok(ExplainabilityReport {
        fidelity_mse: shap_fidelity(attributions)?,
        sparsity_avg: shap_sparsity(attributions, tau)?,
        tau,
        n_explained: attributions.len(),
        n_features: attributions[0].phi.len(),
    })
}

/// Left-aligned first column, right-aligned remaining columns, padded to the widest cell.
pub fn text_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let cols = headers.len();
    let mut width: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let parts: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| if i == 0 { format!("{c:<w$}", w = width[i]) } else { format!("{c:>w$}", w = width[i]) })
            .collect();
        parts.join("  ").trim_end().to_string()
    };
    let mut out = line(headers.to_vec());
    out.push('\n');
    out.push_str(&width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
    out.push('\n');
    for row in rows {
        let cells: Vec<&str> = (0..cols).map(|i| row.get(i).map_or("", String::as_str)).collect();
        out.push_str(&line(cells));
        out.push('\n');
    }
    out
}

impl PerformanceReport {
    pub fn to_text(&self, class_names: &[String]) -> String {
        let mut out = format!(
            "accuracy {:.4}  precision {:.4}  recall {:.4}  f1 {:.4}  ({})\n\n",
            self.accuracy,
            self.precision,
            self.recall,
            self.f1,
            self.averaging.as_str()
        );
        let rows: Vec<Vec<String>> = self
            .per_class
            .iter()
            .map(|c| {
                vec![
                    class_names.get(c.class).cloned().unwrap_or_else(|| c.class.to_string()),
                    format!("{:.4}", c.precision),
                    format!("{:.4}", c.recall),
                    format!("{:.4}", c.f1),
                    c.support.to_string(),
                ]
            })
            .collect();
        out.push_str(&text_table(&["class", "precision", "recall", "f1", "support"], &rows));
        out
    }
}
