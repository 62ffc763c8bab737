//! Binary decision trees shared by the forest and boosting models.
//!
//! Nodes live in a flat vector with the root at index 0. A row goes left when
//! `x[feature] <= threshold`.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    /// Class distribution (forest) or a single real value (boosting).
    Leaf { value: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// A tree that is a single leaf.
    pub fn leaf(value: Vec<f64>) -> Self {
        Self { nodes: vec![Node::Leaf { value }] }
    }

    pub fn leaf_values(&self, x: &[f64]) -> &[f64] {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Split { feature, threshold, left, right } => {
                    idx = if x[*feature] <= *threshold { *left } else { *right };
                }
                Node::Leaf { value } => return value,
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Split { left, right, .. } => 1 + walk(t, *left).max(walk(t, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// True when some split tests `feature`.
    pub fn uses_feature(&self, feature: usize) -> bool {
        self.nodes.iter().any(|n| matches!(n, Node::Split { feature: f, .. } if *f == feature))
    }

    /// Checks child indices, feature indices and leaf widths.
    pub fn validate(&self, n_features: usize, leaf_width: usize) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("tree has no nodes".into());
        }
        for (i, node) in self.nodes.iter().enumerate() {
            match node {
                Node::Split { feature, threshold, left, right } => {
                    if *feature >= n_features {
                        return Err(format!("node {i}: feature {feature} out of range"));
                    }
                    if !threshold.is_finite() {
                        return Err(format!("node {i}: non-finite threshold"));
                    }
                    if *left <= i || *right <= i || *left >= self.nodes.len() || *right >= self.nodes.len() {
                        return Err(format!("node {i}: bad child index"));
                    }
                }
                Node::Leaf { value } => {
                    if value.len() != leaf_width || value.iter().any(|v| !v.is_finite()) {
                        return Err(format!("node {i}: bad leaf value"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Growth limits for the Gini classification tree.
#[derive(Debug, Clone, Copy)]
pub(crate) struct GiniTreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub features_per_split: usize,
}

struct Candidate {
    score: f64,
    feature: usize,
    threshold: f64,
    n_left: usize,
}

fn better(c: &Candidate, best: &Option<Candidate>) -> bool {
    match best {
        None => true,
        Some(b) => {
            c.score > b.score
                || (c.score == b.score && (c.feature < b.feature || (c.feature == b.feature && c.threshold < b.threshold)))
        }
    }
}

/// Grows a classification tree with Gini impurity on the rows in `indices`
/// (duplicates allowed, as produced by bootstrap sampling).
pub(crate) fn grow_gini_tree<R: Rng>(
    x: &Array2<f64>,
    y: &[usize],
    n_classes: usize,
    indices: Vec<usize>,
    params: GiniTreeParams,
    rng: &mut R,
) -> Tree {
    let mut nodes = Vec::new();
    grow_gini_node(x, y, n_classes, indices, 0, params, rng, &mut nodes);
    Tree { nodes }
}

#[allow(clippy::too_many_arguments)]
fn grow_gini_node<R: Rng>(
    x: &Array2<f64>,
    y: &[usize],
    n_classes: usize,
    mut indices: Vec<usize>,
    depth: usize,
    params: GiniTreeParams,
    rng: &mut R,
    nodes: &mut Vec<Node>,
) -> usize {
    let id = nodes.len();
    let n = indices.len();
    let mut counts = vec![0usize; n_classes];
    for &i in &indices {
        counts[y[i]] += 1;
    }
    let leaf = |counts: &[usize]| Node::Leaf { value: counts.iter().map(|&c| c as f64 / n as f64).collect() };
    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
    let depth_capped = params.max_depth.is_some_and(|m| depth >= m);
    if pure || depth_capped || n < 2 * params.min_samples_leaf.max(1) {
        nodes.push(leaf(&counts));
        return id;
    }

    let d = x.ncols();
    let mut order: Vec<usize> = (0..d).collect();
    order.shuffle(rng);
    let mut best: Option<Candidate> = None;
    let mut pairs: Vec<(f64, usize)> = Vec::with_capacity(n);
    for (visited, &f) in order.iter().enumerate() {
        if visited >= params.features_per_split && best.is_some() {
            break;
        }
        pairs.clear();
        pairs.extend(indices.iter().map(|&i| (x[[i, f]], y[i])));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left = vec![0usize; n_classes];
        let mut left_sq = 0.0f64;
        let mut right = counts.clone();
        let mut right_sq: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
        for k in 0..n - 1 {
            let c = pairs[k].1;
            left_sq += (2 * left[c] + 1) as f64;
            left[c] += 1;
            right_sq -= (2 * right[c] - 1) as f64;
            right[c] -= 1;
            let n_left = k + 1;
            if pairs[k].0 == pairs[k + 1].0 || n_left < params.min_samples_leaf || n - n_left < params.min_samples_leaf {
                continue;
            }
            // maximising sum(c^2)/n over both children minimises weighted Gini
            let score = left_sq / n_left as f64 + right_sq / (n - n_left) as f64;
            let threshold = 0.5 * (pairs[k].0 + pairs[k + 1].0);
            let cand = Candidate { score, feature: f, threshold, n_left };
            if better(&cand, &best) {
                best = Some(cand);
            }
        }
    }

    let Some(split) = best else {
        nodes.push(leaf(&counts));
        return id;
    };
    let (l_idx, r_idx): (Vec<usize>, Vec<usize>) =
        indices.drain(..).partition(|&i| x[[i, split.feature]] <= split.threshold);
    debug_assert_eq!(l_idx.len(), split.n_left);
    nodes.push(Node::Split { feature: split.feature, threshold: split.threshold, left: 0, right: 0 });
    let left = grow_gini_node(x, y, n_classes, l_idx, depth + 1, params, rng, nodes);
    let right = grow_gini_node(x, y, n_classes, r_idx, depth + 1, params, rng, nodes);
    if let Node::Split { left: l, right: r, .. } = &mut nodes[id] {
        *l = left;
        *r = right;
    }
    id
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct NewtonTreeParams {
    pub max_depth: usize,
    pub lambda_l2: f64,
    pub min_child_weight: f64,
}

/// Grows a regression tree on first/second-order gradients. Leaves hold the
/// Newton step `-G / (H + lambda)`.
pub(crate) fn grow_newton_tree(x: &Array2<f64>, grad: &[f64], hess: &[f64], params: NewtonTreeParams) -> Tree {
    let mut nodes = Vec::new();
    let indices: Vec<usize> = (0..x.nrows()).collect();
    grow_newton_node(x, grad, hess, indices, 0, params, &mut nodes);
    Tree { nodes }
}

fn grow_newton_node(
    x: &Array2<f64>,
    grad: &[f64],
    hess: &[f64],
    mut indices: Vec<usize>,
    depth: usize,
    params: NewtonTreeParams,
    nodes: &mut Vec<Node>,
) -> usize {
    let id = nodes.len();
    let g_sum: f64 = indices.iter().map(|&i| grad[i]).sum();
    let h_sum: f64 = indices.iter().map(|&i| hess[i]).sum();
    let lambda = params.lambda_l2;
    let leaf = Node::Leaf { value: vec![-g_sum / (h_sum + lambda)] };
    if depth >= params.max_depth || indices.len() < 2 {
        nodes.push(leaf);
        return id;
    }

    let parent = g_sum * g_sum / (h_sum + lambda);
    let mut best: Option<(f64, usize, f64)> = None;
    let mut order: Vec<usize> = indices.clone();
    for f in 0..x.ncols() {
        order.sort_by(|&a, &b| x[[a, f]].total_cmp(&x[[b, f]]));
        let (mut gl, mut hl) = (0.0, 0.0);
        for k in 0..order.len() - 1 {
            let i = order[k];
            gl += grad[i];
            hl += hess[i];
            let (v, v_next) = (x[[i, f]], x[[order[k + 1], f]]);
            if v == v_next {
                continue;
            }
            let (gr, hr) = (g_sum - gl, h_sum - hl);
            if hl < params.min_child_weight || hr < params.min_child_weight {
                continue;
            }
            let gain = 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent);
            if gain > 0.0 && best.is_none_or(|(g, _, _)| gain > g) {
                best = Some((gain, f, 0.5 * (v + v_next)));
            }
        }
    }

    let Some((_, feature, threshold)) = best else {
        nodes.push(leaf);
        return id;
    };
    let (l_idx, r_idx): (Vec<usize>, Vec<usize>) = indices.drain(..).partition(|&i| x[[i, feature]] <= threshold);
    nodes.push(Node::Split { feature, threshold, left: 0, right: 0 });
    let left = grow_newton_node(x, grad, hess, l_idx, depth + 1, params, nodes);
    let right = grow_newton_node(x, grad, hess, r_idx, depth + 1, params, nodes);
    if let Node::Split { left: l, right: r, .. } = &mut nodes[id] {
        *l = left;
        *r = right;
    }
    id
}
