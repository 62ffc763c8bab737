use super::{inv_binomial, Attribution, BackgroundSet, ExplainMethod, Game, Result, ShapError};
use crate::models::Classifier;

pub const MAX_EXACT_FEATURES: usize = 20;

/// Shapley values by evaluating all `2^d` coalitions.
pub fn exact_shapley<C: Classifier + ?Sized>(
    model: &C,
    x: &[f64],
    background: &BackgroundSet,
    class: usize,
) -> Result<Attribution> {
    let d = x.len();
    if d > MAX_EXACT_FEATURES {
        return Err(ShapError::TooManyFeatures(d));
    }
    let mut game = Game::new(model, x, background, class)?;
    let n_masks = 1usize << d;
    let values: Vec<f64> = (0..n_masks as u64).map(|m| game.value(m)).collect();
    // w(s) = s! (d-s-1)! / d! = 1 / (d * C(d-1, s))
    let weights: Vec<f64> = (0..d).map(|s| inv_binomial(d - 1, s) / d as f64).collect();
    let mut phi = vec![0.0; d];
    for (i, p) in phi.iter_mut().enumerate() {
        let bit = 1usize << i;
        let mut acc = 0.0;
        for mask in (0..n_masks).filter(|m| m & bit == 0) {
            acc += weights[mask.count_ones() as usize] * (values[mask | bit] - values[mask]);
        }
        *p = acc;
    }
    Ok(Attribution {
        base_value: values[0],
        phi,
        fx: values[n_masks - 1],
        feature_names: Vec::new(),
        class_index: class,
        method: ExplainMethod::Exact,
    })
}
