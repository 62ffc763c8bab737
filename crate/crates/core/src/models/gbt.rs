use serde::{Deserialize, Serialize};

use super::tree::{grow_newton_tree, NewtonTreeParams, Tree};
use super::{require_two_classes, sigmoid, AdditiveTrees, Classifier, ModelError, OutputScale, Result};
use crate::datasets::TabularDataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GbtParams {
    pub n_rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub lambda_l2: f64,
    pub min_child_weight: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self { n_rounds: 100, max_depth: 3, learning_rate: 0.1, lambda_l2: 1.0, min_child_weight: 1.0 }
    }
}

impl GbtParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ModelError::InvalidParams("learning_rate must be positive".into()));
        }
        if !(self.lambda_l2 >= 0.0 && self.lambda_l2.is_finite()) {
            return Err(ModelError::InvalidParams("lambda_l2 must be non-negative".into()));
        }
        if !(self.min_child_weight >= 0.0 && self.min_child_weight.is_finite()) {
            return Err(ModelError::InvalidParams("min_child_weight must be non-negative".into()));
        }
        Ok(())
    }
}

/// Binary logistic model boosted with Newton steps:
/// `p(x) = sigmoid(base_score + learning_rate * sum_t leaf_t(x))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub trees: Vec<Tree>,
    pub learning_rate: f64,
    /// Log-odds of the training prior.
    pub base_score: f64,
    pub feature_count: usize,
    pub params: GbtParams,
    /// Mean training log-loss after each round (index 0 is the prior alone).
    pub train_loss: Vec<f64>,
}

pub fn fit_gbt(train: &TabularDataset, params: &GbtParams, _seed: u64) -> Result<GbtModel> {
    params.validate()?;
    if train.n_classes() != 2 {
        return Err(ModelError::BinaryOnly("gradient boosting"));
    }
    require_two_classes(train)?;
    let n = train.n_samples();
    let target: Vec<f64> = train.y.iter().map(|&c| c as f64).collect();
    let prior = target.iter().sum::<f64>() / n as f64;
    let base_score = (prior / (1.0 - prior)).ln();

    let tree_params =
        NewtonTreeParams { max_depth: params.max_depth, lambda_l2: params.lambda_l2, min_child_weight: params.min_child_weight };
    let mut margin = vec![base_score; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trees = Vec::with_capacity(params.n_rounds);
    let mut train_loss = vec![log_loss(&margin, &target)];
    for _ in 0..params.n_rounds {
        for i in 0..n {
            let p = sigmoid(margin[i]);
            grad[i] = p - target[i];
            hess[i] = p * (1.0 - p);
        }
        let tree = grow_newton_tree(&train.x, &grad, &hess, tree_params);
        for (i, row) in train.x.outer_iter().enumerate() {
            let row = row.to_vec();
            margin[i] += params.learning_rate * tree.leaf_values(&row)[0];
        }
        train_loss.push(log_loss(&margin, &target));
        trees.push(tree);
    }
    log::debug!("gbt: {} rounds, final train loss {:.6}", params.n_rounds, train_loss.last().copied().unwrap_or(f64::NAN));

    Ok(GbtModel {
        trees,
        learning_rate: params.learning_rate,
        base_score,
        feature_count: train.n_features(),
        params: params.clone(),
        train_loss,
    })
}

fn log_loss(margin: &[f64], target: &[f64]) -> f64 {
    // log(1 + e^m) - t*m, computed stably
    let total: f64 = margin
        .iter()
        .zip(target)
        .map(|(&m, &t)| m.max(0.0) + (-m.abs()).exp().ln_1p() - t * m)
        .sum();
    total / margin.len() as f64
}

impl GbtModel {
    /// Log-odds of the positive class.
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.additive_trees(1).eval(x)
    }

    /// Class 1 is explained on the log-odds; class 0 on its negation.
    pub fn additive_trees(&self, class: usize) -> AdditiveTrees<'_> {
        let sign = if class == 0 { -1.0 } else { 1.0 };
        AdditiveTrees { trees: &self.trees, leaf_index: 0, scale: sign * self.learning_rate, offset: sign * self.base_score }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.base_score.is_finite() || !self.learning_rate.is_finite() {
            return Err(ModelError::Malformed("non-finite base score or learning rate".into()));
        }
        for (i, t) in self.trees.iter().enumerate() {
            t.validate(self.feature_count, 1).map_err(|e| ModelError::Malformed(format!("round {i}: {e}")))?;
        }
        Ok(())
    }
}

impl Classifier for GbtModel {
    fn n_features(&self) -> usize {
        self.feature_count
    }

    fn n_classes(&self) -> usize {
        2
    }

    fn predict_proba_row(&self, x: &[f64]) -> Vec<f64> {
        let p = sigmoid(self.margin(x));
        vec![1.0 - p, p]
    }

    fn explained_output(&self, x: &[f64], class: usize) -> f64 {
        self.additive_trees(class).eval(x)
    }

    fn output_scale(&self) -> OutputScale {
        OutputScale::Margin
    }
}
