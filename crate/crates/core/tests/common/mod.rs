#![allow(dead_code)]

pub mod specgen;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xplainbench::datasets::{TabularDataset, TaskKind};
use xplainbench::models::{Classifier, ForestModel, GbtModel, GbtParams, Model, Node, OutputScale, RfParams, Tree};
use xplainbench::shap::BackgroundSet;

/// A scalar model given by a closure; class 1 is `f`, class 0 is `1 - f`.
pub struct FnModel {
    pub d: usize,
    pub f: Box<dyn Fn(&[f64]) -> f64 + Sync>,
}

impl FnModel {
    pub fn new(d: usize, f: impl Fn(&[f64]) -> f64 + Sync + 'static) -> Self {
        Self { d, f: Box::new(f) }
    }
}

impl Classifier for FnModel {
    fn n_features(&self) -> usize {
        self.d
    }
    fn n_classes(&self) -> usize {
        2
    }
    fn predict_proba_row(&self, x: &[f64]) -> Vec<f64> {
        let p = (self.f)(x).clamp(0.0, 1.0);
        vec![1.0 - p, p]
    }
    fn explained_output(&self, x: &[f64], class: usize) -> f64 {
        let v = (self.f)(x);
        if class == 1 {
            v
        } else {
            1.0 - v
        }
    }
    fn output_scale(&self) -> OutputScale {
        OutputScale::Probability
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random tree of at most `depth` levels over `features`, thresholds in (0, 1).
/// `leaf` produces the leaf payload.
pub fn random_tree(
    r: &mut ChaCha8Rng,
    features: &[usize],
    depth: usize,
    leaf: &mut dyn FnMut(&mut ChaCha8Rng) -> Vec<f64>,
) -> Tree {
    fn grow(
        r: &mut ChaCha8Rng,
        features: &[usize],
        depth: usize,
        leaf: &mut dyn FnMut(&mut ChaCha8Rng) -> Vec<f64>,
        nodes: &mut Vec<Node>,
    ) -> usize {
        let idx = nodes.len();
        if depth == 0 || features.is_empty() || r.random_bool(0.15) {
            let value = leaf(r);
            nodes.push(Node::Leaf { value });
            return idx;
        }
        nodes.push(Node::Leaf { value: vec![] });
        let feature = features[r.random_range(0..features.len())];
        let threshold = r.random_range(0.05..0.95);
        let left = grow(r, features, depth - 1, leaf, nodes);
        let right = grow(r, features, depth - 1, leaf, nodes);
        nodes[idx] = Node::Split { feature, threshold, left, right };
        idx
    }
    let mut nodes = Vec::new();
    grow(r, features, depth, leaf, &mut nodes);
    Tree { nodes }
}

fn class_dist(r: &mut ChaCha8Rng) -> Vec<f64> {
    let p: f64 = r.random();
    vec![1.0 - p, p]
}

/// Hand-built binary forest whose trees only split on `features`.
pub fn random_forest(r: &mut ChaCha8Rng, d: usize, features: &[usize], n_trees: usize, depth: usize) -> ForestModel {
    let trees = (0..n_trees).map(|_| random_tree(r, features, depth, &mut class_dist)).collect();
    ForestModel { trees, n_classes: 2, feature_count: d, params: RfParams::default() }
}

/// Hand-built boosted ensemble whose trees only split on `features`.
pub fn random_gbt(r: &mut ChaCha8Rng, d: usize, features: &[usize], n_trees: usize, depth: usize) -> GbtModel {
    let mut leaf = |r: &mut ChaCha8Rng| vec![r.random_range(-2.0..2.0)];
    let trees = (0..n_trees).map(|_| random_tree(r, features, depth, &mut leaf)).collect();
    GbtModel {
        trees,
        learning_rate: 0.3,
        base_score: r.random_range(-1.0..1.0),
        feature_count: d,
        params: GbtParams::default(),
        train_loss: vec![],
    }
}

pub fn uniform_rows(r: &mut ChaCha8Rng, n: usize, d: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |_| r.random::<f64>())
}

pub fn background(r: &mut ChaCha8Rng, n: usize, d: usize) -> BackgroundSet {
    BackgroundSet::new(uniform_rows(r, n, d)).unwrap()
}

/// 8 uniform features; the label depends non-linearly on the first five.
pub fn synthetic8(n: usize, seed: u64) -> TabularDataset {
    let mut r = rng(seed);
    let x = uniform_rows(&mut r, n, 8);
    let y = x
        .outer_iter()
        .map(|row| {
            let s = 2.0 * row[0] + row[1] * row[2] - (row[3] - 0.5).abs() + 0.5 * row[4] + 0.2 * (r.random::<f64>() - 0.5);
            usize::from(s > 1.2)
        })
        .collect();
    let names = (0..8).map(|j| format!("f{j}")).collect();
    TabularDataset::new(names, x, y, vec!["neg".into(), "pos".into()], "label", TaskKind::Binary).unwrap()
}

/// Three-class variant of [`synthetic8`].
pub fn synthetic8_multiclass(n: usize, seed: u64) -> TabularDataset {
    let mut r = rng(seed);
    let x = uniform_rows(&mut r, n, 8);
    let y = x
        .outer_iter()
        .map(|row| {
            let s = row[0] + row[1] * row[2] + 0.3 * row[5];
            if s < 0.55 {
                0
            } else if s < 1.0 {
                1
            } else {
                2
            }
        })
        .collect();
    let names = (0..8).map(|j| format!("f{j}")).collect();
    let classes = vec!["a".into(), "b".into(), "c".into()];
    TabularDataset::new(names, x, y, classes, "label", TaskKind::Multiclass).unwrap()
}

pub fn rf(m: ForestModel) -> Model {
    Model::RandomForest(m)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn yeast_path() -> String {
    format!("{}/data/yeast.csv", env!("CARGO_MANIFEST_DIR"))
}
