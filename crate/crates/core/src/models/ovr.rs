use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Classifier, FamilyParams, Model, ModelError, OutputScale, Result};
use crate::datasets::{TabularDataset, TaskKind};

/// One binary model per class, each trained on "class k versus the rest".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvrModel {
    pub components: Vec<Model>,
    pub n_classes: usize,
    /// Rescale component positives to sum to one per row.
    pub normalize: bool,
}

/// Component k is fitted with seed `seed ^ k`.
pub fn fit_ovr(params: &FamilyParams, train: &TabularDataset, seed: u64) -> Result<OvrModel> {
    let counts = train.class_counts();
    if let Some(k) = counts.iter().position(|&c| c == 0) {
        return Err(ModelError::MissingClass(train.class_names[k].clone()));
    }
    let components = (0..train.n_classes())
        .into_par_iter()
        .map(|k| {
            let y = train.y.iter().map(|&c| usize::from(c == k)).collect();
            let binary = TabularDataset {
                y,
                class_names: vec!["rest".into(), train.class_names[k].clone()],
                task_kind: TaskKind::Binary,
                ..train.clone()
            };
            params.fit(&binary, seed ^ k as u64)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OvrModel { components, n_classes: train.n_classes(), normalize: true })
}

impl OvrModel {
    fn raw_scores(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|m| m.predict_proba_row(x)[1]).collect()
    }
}

/// Divides by the row sum; an all-zero row becomes uniform.
pub(crate) fn normalize_row(raw: &mut [f64]) {
    let s: f64 = raw.iter().sum();
    if s > 0.0 {
        raw.iter_mut().for_each(|v| *v /= s);
    } else {
        let u = 1.0 / raw.len() as f64;
        raw.iter_mut().for_each(|v| *v = u);
    }
}

impl Classifier for OvrModel {
    fn n_features(&self) -> usize {
        self.components[0].n_features()
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_proba_row(&self, x: &[f64]) -> Vec<f64> {
        let mut raw = self.raw_scores(x);
        if self.normalize {
            normalize_row(&mut raw);
        }
        raw
    }

    /// Component k's own positive-class output, before normalization.
    fn explained_output(&self, x: &[f64], class: usize) -> f64 {
        self.components[class].explained_output(x, 1)
    }

    fn explained_output_batch(&self, x: &Array2<f64>, class: usize) -> Vec<f64> {
        self.components[class].explained_output_batch(x, 1)
    }

    fn output_scale(&self) -> OutputScale {
        self.components[0].output_scale()
    }
}
