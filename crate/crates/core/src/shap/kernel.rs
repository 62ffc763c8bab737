use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{inv_binomial, Attribution, BackgroundSet, ExplainMethod, Game, KernelBudget, Result, ShapError};
use crate::models::Classifier;

const MAX_KERNEL_FEATURES: usize = 63;
const MAX_DRAWS: usize = 10;

/// KernelSHAP with `sum(phi) = f(x) - phi0` imposed exactly.
///
/// With [`KernelBudget::Full`] (or a budget covering every proper coalition)
/// the regression is the exact Shapley solution.
pub fn kernel_shap<C: Classifier + ?Sized>(
    model: &C,
    x: &[f64],
    background: &BackgroundSet,
    budget: KernelBudget,
    seed: u64,
    class: usize,
) -> Result<Attribution> {
    let d = x.len();
    if d > MAX_KERNEL_FEATURES {
        return Err(ShapError::InvalidConfig(format!("kernel method supports at most {MAX_KERNEL_FEATURES} features")));
    }
    let mut game = Game::new(model, x, background, class)?;
    let base_value = game.value(0);
    let fx = game.fx();
    let delta = fx - base_value;
    let attribution = |phi| Attribution {
        base_value,
        phi,
        fx,
        feature_names: Vec::new(),
        class_index: class,
        method: ExplainMethod::Kernel,
    };
    if d == 1 {
        return Ok(attribution(vec![delta]));
    }

    let proper = (1u64 << d) - 2;
    let full = match budget {
        KernelBudget::Full => true,
        KernelBudget::Samples(m) => {
            if m < d + 2 {
                return Err(ShapError::InvalidConfig(format!("kernel budget {m} is below d + 2 = {}", d + 2)));
            }
            m as u64 >= proper
        }
    };
    if full {
        let masks: Vec<u64> = (1..=proper).collect();
        let values: Vec<f64> = masks.iter().map(|&m| game.value(m)).collect();
        return solve(d, &masks, &values, base_value, delta).map(attribution).ok_or(ShapError::Singular(1));
    }

    let m = match budget {
        KernelBudget::Samples(m) => m,
        KernelBudget::Full => unreachable!(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_DRAWS {
        let masks = draw_coalitions(d, m, &mut rng);
        let values: Vec<f64> = masks.iter().map(|&mask| game.value(mask)).collect();
        if let Some(phi) = solve(d, &masks, &values, base_value, delta) {
            return Ok(attribution(phi));
        }
    }
    Err(ShapError::Singular(MAX_DRAWS))
}

/// `m` distinct proper coalitions with size probability proportional to the
/// total kernel weight of that size.
///
/// A coalition and its complement give the same regression row up to sign, so
/// pairs are drawn only when `m >= 2d` leaves room for `d - 1` independent rows.
fn draw_coalitions(d: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let paired = m >= 2 * d;
    let size_weight: Vec<f64> = (1..d).map(|s| 1.0 / (s * (d - s)) as f64).collect();
    let total: f64 = size_weight.iter().sum();
    let all = (1u64 << d) - 1;
    let mut chosen = BTreeSet::new();
    let mut order = Vec::with_capacity(m);
    while order.len() < m {
        let mut u = rng.random::<f64>() * total;
        let mut s = d - 1;
        for (i, w) in size_weight.iter().enumerate() {
            if u < *w {
                s = i + 1;
                break;
            }
            u -= w;
        }
        let mask = sample(rng, d, s).iter().fold(0u64, |acc, j| acc | 1 << j);
        let pair = [mask, all ^ mask];
        for &z in &pair[..if paired { 2 } else { 1 }] {
            if order.len() < m && chosen.insert(z) {
                order.push(z);
            }
        }
    }
    order
}

/// Weighted least squares in the `d - 1` free coordinates after substituting
/// `phi_last = delta - sum(others)`. `None` if the normal matrix is singular.
fn solve(d: usize, masks: &[u64], values: &[f64], base: f64, delta: f64) -> Option<Vec<f64>> {
    let p = d - 1;
    let mut ata = DMatrix::<f64>::zeros(p, p);
    let mut atb = DVector::<f64>::zeros(p);
    let last = p;
    let mut row = vec![0.0; p];
    for (&mask, &v) in masks.iter().zip(values) {
        let size = mask.count_ones() as usize;
        let w = (d - 1) as f64 * inv_binomial(d, size) / (size * (d - size)) as f64;
        let z_last = (mask >> last & 1) as f64;
        let target = v - base - z_last * delta;
        for (i, r) in row.iter_mut().enumerate() {
            *r = (mask >> i & 1) as f64 - z_last;
        }
        for i in 0..p {
            if row[i] == 0.0 {
                continue;
            }
            atb[i] += w * row[i] * target;
            for j in 0..p {
                ata[(i, j)] += w * row[i] * row[j];
            }
        }
    }
    let sol = ata.cholesky()?.solve(&atb);
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut phi: Vec<f64> = sol.iter().copied().collect();
    phi.push(delta - phi.iter().sum::<f64>());
    Some(phi)
}
