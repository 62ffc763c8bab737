use super::{inv_binomial, Attribution, BackgroundSet, ExplainMethod, Result, ShapError};
use crate::models::{AdditiveTrees, Model, Node, Tree};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Free,
    /// Feature taken from the explained row.
    X,
    /// Feature taken from the reference row.
    R,
}

struct Walk<'a> {
    tree: &'a Tree,
    leaf_index: usize,
    x: &'a [f64],
    r: &'a [f64],
    side: Vec<Side>,
    on_x: Vec<usize>,
    on_r: Vec<usize>,
}

impl Walk<'_> {
    /// A leaf reached when features `A` come from x and `B` from r is the
    /// game `v(S) = leaf * [A subset of S, B disjoint from S]`, whose Shapley
    /// values are `+leaf / (a C(a+b, a))` on A and `-leaf / (b C(a+b, b))` on B.
    fn visit(&mut self, node: usize, phi: &mut [f64]) {
        match &self.tree.nodes[node] {
            Node::Leaf { value } => {
                let v = value[self.leaf_index];
                let (a, b) = (self.on_x.len(), self.on_r.len());
                if a > 0 {
                    let w = v * inv_binomial(a + b, a) / a as f64;
                    self.on_x.iter().for_each(|&i| phi[i] += w);
                }
                if b > 0 {
                    let w = v * inv_binomial(a + b, b) / b as f64;
                    self.on_r.iter().for_each(|&j| phi[j] -= w);
                }
            }
            &Node::Split { feature, threshold, left, right } => {
                let x_child = if self.x[feature] <= threshold { left } else { right };
                let r_child = if self.r[feature] <= threshold { left } else { right };
                if x_child == r_child {
                    return self.visit(x_child, phi);
                }
                match self.side[feature] {
                    Side::X => self.visit(x_child, phi),
                    Side::R => self.visit(r_child, phi),
                    Side::Free => {
                        self.side[feature] = Side::X;
                        self.on_x.push(feature);
                        self.visit(x_child, phi);
                        self.on_x.pop();
                        self.side[feature] = Side::R;
                        self.on_r.push(feature);
                        self.visit(r_child, phi);
                        self.on_r.pop();
                        self.side[feature] = Side::Free;
                    }
                }
            }
        }
    }
}

/// Exact interventional Shapley values of a tree ensemble.
pub fn tree_shap(model: &Model, x: &[f64], background: &BackgroundSet, class: usize) -> Result<Attribution> {
    let ensemble = model.additive_trees(class).ok_or_else(|| ShapError::UnsupportedModel(model.family_name()))?;
    let d = crate::models::Classifier::n_features(model);
    if x.len() != d {
        return Err(ShapError::DimensionMismatch { expected: d, got: x.len() });
    }
    background.check(d)?;
    Ok(explain_ensemble(&ensemble, x, background, class))
}

pub(crate) fn explain_ensemble(ensemble: &AdditiveTrees<'_>, x: &[f64], background: &BackgroundSet, class: usize) -> Attribution {
    let d = x.len();
    let k = background.len() as f64;
    let mut phi = vec![0.0; d];
    let mut base_sum = 0.0;
    for r in background.rows.outer_iter() {
        let r = r.to_vec();
        base_sum += ensemble.eval(&r);
        for tree in ensemble.trees {
            let mut walk = Walk {
                tree,
                leaf_index: ensemble.leaf_index,
                x,
                r: &r,
                side: vec![Side::Free; d],
                on_x: Vec::new(),
                on_r: Vec::new(),
            };
            walk.visit(0, &mut phi);
        }
    }
    let scale = ensemble.scale / k;
    phi.iter_mut().for_each(|p| *p *= scale);
    Attribution {
        base_value: base_sum / k,
        phi,
        fx: ensemble.eval(x),
        feature_names: Vec::new(),
        class_index: class,
        method: ExplainMethod::Tree,
    }
}
