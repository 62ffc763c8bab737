use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow_gini_tree, GiniTreeParams, Tree};
use super::{require_two_classes, AdditiveTrees, Classifier, ModelError, OutputScale, Result};
use crate::datasets::TabularDataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfParams {
    pub n_trees: usize,
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// `None` means `ceil(sqrt(d))`.
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
}

impl Default for RfParams {
    fn default() -> Self {
        Self { n_trees: 100, max_depth: None, min_samples_leaf: 1, features_per_split: None, bootstrap: true }
    }
}

impl RfParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(ModelError::InvalidParams("n_trees must be at least 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(ModelError::InvalidParams("min_samples_leaf must be at least 1".into()));
        }
        if self.features_per_split == Some(0) {
            return Err(ModelError::InvalidParams("features_per_split must be at least 1".into()));
        }
        Ok(())
    }
}

/// Bagged Gini trees; predictions average the leaf class distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub n_classes: usize,
    pub feature_count: usize,
    pub params: RfParams,
}

pub fn fit_random_forest(train: &TabularDataset, params: &RfParams, seed: u64) -> Result<ForestModel> {
    params.validate()?;
    require_two_classes(train)?;
    let n = train.n_samples();
    let d = train.n_features();
    let per_split = params.features_per_split.unwrap_or_else(|| (d as f64).sqrt().ceil() as usize).clamp(1, d);
    let tree_params =
        GiniTreeParams { max_depth: params.max_depth, min_samples_leaf: params.min_samples_leaf, features_per_split: per_split };

    let trees: Vec<Tree> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ t as u64);
            let indices: Vec<usize> =
                if params.bootstrap { (0..n).map(|_| rng.random_range(0..n)).collect() } else { (0..n).collect() };
            grow_gini_tree(&train.x, &train.y, train.n_classes(), indices, tree_params, &mut rng)
        })
        .collect();

    Ok(ForestModel { trees, n_classes: train.n_classes(), feature_count: d, params: params.clone() })
}

impl ForestModel {
    pub fn additive_trees(&self, class: usize) -> AdditiveTrees<'_> {
        AdditiveTrees { trees: &self.trees, leaf_index: class, scale: 1.0 / self.trees.len() as f64, offset: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trees.is_empty() {
            return Err(ModelError::Malformed("forest has no trees".into()));
        }
        for (i, t) in self.trees.iter().enumerate() {
            t.validate(self.feature_count, self.n_classes).map_err(|e| ModelError::Malformed(format!("tree {i}: {e}")))?;
        }
        Ok(())
    }
}

impl Classifier for ForestModel {
    fn n_features(&self) -> usize {
        self.feature_count
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_proba_row(&self, x: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_classes];
        for t in &self.trees {
            for (a, v) in acc.iter_mut().zip(t.leaf_values(x)) {
                *a += v;
            }
        }
        let n = self.trees.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }

    fn explained_output(&self, x: &[f64], class: usize) -> f64 {
        self.additive_trees(class).eval(x)
    }

    fn output_scale(&self) -> OutputScale {
        OutputScale::Probability
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{generate_alertness, AlertnessGenConfig, TaskKind};
    use crate::models::Node;
    use ndarray::Array2;

    fn threshold_data(n: usize) -> TabularDataset {
        let x = Array2::from_shape_fn((n, 3), |(i, j)| ((i * (j + 3) * 7919) % 1000) as f64 / 1000.0);
        let y = x.column(0).iter().map(|&v| usize::from(v > 0.5)).collect();
        TabularDataset::new(
            vec!["a".into(), "b".into(), "c".into()],
            x,
            y,
            vec!["0".into(), "1".into()],
            "y",
            TaskKind::Binary,
        )
        .unwrap()
    }

    #[test]
    fn single_tree_fits_separable_data() {
        let ds = threshold_data(200);
        let params = RfParams { n_trees: 1, bootstrap: false, features_per_split: Some(3), ..Default::default() };
        let model = fit_random_forest(&ds, &params, 0).unwrap();
        let pred = model.predict(&ds.x).unwrap();
        assert_eq!(pred, ds.y);
    }

    #[test]
    fn deterministic_given_seed() {
        let ds = threshold_data(300);
        let params = RfParams { n_trees: 8, ..Default::default() };
        let a = fit_random_forest(&ds, &params, 11).unwrap();
        let b = fit_random_forest(&ds, &params, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.predict_proba(&ds.x).unwrap(), b.predict_proba(&ds.x).unwrap());
    }

    #[test]
    fn thread_count_does_not_change_the_model() {
        let ds = threshold_data(300);
        let params = RfParams { n_trees: 6, ..Default::default() };
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let serial = pool.install(|| fit_random_forest(&ds, &params, 5).unwrap());
        assert_eq!(serial, fit_random_forest(&ds, &params, 5).unwrap());
    }

    #[test]
    fn single_class_is_rejected() {
        let mut ds = threshold_data(20);
        ds.y.iter_mut().for_each(|c| *c = 1);
        assert!(matches!(fit_random_forest(&ds, &RfParams::default(), 0), Err(ModelError::SingleClass(_))));
    }

    #[test]
    fn constant_leaves_and_averaging() {
        let constant = ForestModel {
            trees: vec![Tree::leaf(vec![0.3, 0.7]); 3],
            n_classes: 2,
            feature_count: 2,
            params: RfParams::default(),
        };
        let x = Array2::from_shape_vec((2, 2), vec![0.0, 1.0, 5.0, -3.0]).unwrap();
        for row in constant.predict_proba(&x).unwrap().outer_iter() {
            assert!((row[0] - 0.3).abs() < 1e-12 && (row[1] - 0.7).abs() < 1e-12);
        }
        let split = |left: Vec<f64>, right: Vec<f64>| Tree {
            nodes: vec![
                Node::Split { feature: 0, threshold: 0.0, left: 1, right: 2 },
                Node::Leaf { value: left },
                Node::Leaf { value: right },
            ],
        };
        let two = ForestModel {
            trees: vec![split(vec![1.0, 0.0], vec![0.5, 0.5]), split(vec![0.0, 1.0], vec![0.5, 0.5])],
            n_classes: 2,
            feature_count: 1,
            params: RfParams::default(),
        };
        assert_eq!(two.predict_proba_row(&[-1.0]), vec![0.5, 0.5]);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let ds = threshold_data(50);
        let model = fit_random_forest(&ds, &RfParams { n_trees: 2, ..Default::default() }, 0).unwrap();
        let bad = Array2::zeros((3, 2));
        assert!(matches!(model.predict_proba(&bad), Err(ModelError::DimensionMismatch { expected: 3, got: 2 })));
    }

    #[test]
    fn unused_feature_does_not_move_output() {
        let ds = generate_alertness(&AlertnessGenConfig { n: 2000, ..Default::default() }).unwrap();
        let model = fit_random_forest(&ds, &RfParams { n_trees: 5, max_depth: Some(2), ..Default::default() }, 3).unwrap();
        for j in 0..4 {
            if model.trees.iter().any(|t| t.uses_feature(j)) {
                continue;
            }
            let mut x = ds.x.row(0).to_vec();
            let base = model.predict_proba_row(&x);
            x[j] += 123.0;
            assert_eq!(model.predict_proba_row(&x), base);
        }
    }
}
