//! Shapley-value attributions under the interventional value function
//! `v(S) = mean_b f(x_S, b_rest)` over a finite background set.
//!
//! Three explainers share that game: [`exact_shapley`] enumerates every
//! coalition, [`kernel_shap`] solves the Shapley-kernel weighted least squares
//! problem with efficiency imposed, and [`tree_shap`] computes exact values on
//! tree ensembles without enumerating coalitions.

mod exact;
mod kernel;
mod tree;

use std::fmt;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::models::{argmax, Classifier, Model};

pub use exact::{exact_shapley, MAX_EXACT_FEATURES};
pub use kernel::kernel_shap;
pub use tree::tree_shap;

#[derive(Debug, Error)]
pub enum ShapError {
    #[error("exact enumeration supports at most {MAX_EXACT_FEATURES} features, got {0}; use the kernel method")]
    TooManyFeatures(usize),
    #[error("tree explainer needs a tree ensemble, got {0}; use the kernel method")]
    UnsupportedModel(String),
    #[error("kernel regression stayed singular after {0} draws; raise the coalition budget")]
    Singular(usize),
    #[error("invalid explainer config: {0}")]
    InvalidConfig(String),
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("row {index}: {source}")]
    Row {
        index: usize,
        #[source]
        source: Box<ShapError>,
    },
    #[error("io error writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, ShapError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplainMethod {
    Exact,
    Kernel,
    Tree,
}

impl ExplainMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ExplainMethod::Exact => "exact",
            ExplainMethod::Kernel => "kernel",
            ExplainMethod::Tree => "tree",
        }
    }
}

/// Number of coalitions the kernel explainer evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelBudget {
    /// Every proper coalition, `2^d - 2` of them.
    Full,
    Samples(usize),
}

impl Serialize for KernelBudget {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            KernelBudget::Full => s.serialize_str("full"),
            KernelBudget::Samples(m) => s.serialize_u64(*m as u64),
        }
    }
}

impl<'de> Deserialize<'de> for KernelBudget {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(s) if s == "full" => Ok(KernelBudget::Full),
            serde_json::Value::Number(n) if n.as_u64().is_some() => Ok(KernelBudget::Samples(n.as_u64().unwrap() as usize)),
            other => Err(serde::de::Error::custom(format!("expected \"full\" or a positive integer, got {other}"))),
        }
    }
}

impl fmt::Display for KernelBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelBudget::Full => f.write_str("full"),
            KernelBudget::Samples(m) => write!(f, "{m}"),
        }
    }
}

/// Which model output is explained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// Class 1 of a binary model.
    PositiveClassProb,
    /// Each row's own argmax class.
    PredictedClassProb,
    ClassIndex(usize),
}

impl Target {
    /// Class explained for row `x`.
    pub fn resolve<C: Classifier + ?Sized>(self, model: &C, x: &[f64]) -> Result<usize> {
        let k = model.n_classes();
        match self {
            Target::PositiveClassProb if k == 2 => Ok(1),
            Target::PositiveClassProb => {
                Err(ShapError::InvalidConfig(format!("positive_class_prob needs a binary model, this one has {k} classes")))
            }
            Target::PredictedClassProb => Ok(argmax(&model.predict_proba_row(x))),
            Target::ClassIndex(c) if c < k => Ok(c),
            Target::ClassIndex(c) => Err(ShapError::InvalidConfig(format!("class_index {c} out of range for {k} classes"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplainerConfig {
    pub method: ExplainMethod,
    pub background_size: usize,
    pub kernel_budget: KernelBudget,
    pub target: Target,
    /// Seeds background sampling and kernel coalition draws.
    pub seed: u64,
}

impl Default for ExplainerConfig {
    fn default() -> Self {
        Self {
            method: ExplainMethod::Tree,
            background_size: 100,
            kernel_budget: KernelBudget::Full,
            target: Target::PositiveClassProb,
            seed: 0,
        }
    }
}

impl ExplainerConfig {
    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.background_size == 0 {
            return Err(ShapError::InvalidConfig("background_size must be at least 1".into()));
        }
        if self.method == ExplainMethod::Exact && n_features > MAX_EXACT_FEATURES {
            return Err(ShapError::TooManyFeatures(n_features));
        }
        if let (ExplainMethod::Kernel, KernelBudget::Samples(m)) = (self.method, self.kernel_budget) {
            if m < n_features + 2 {
                return Err(ShapError::InvalidConfig(format!(
                    "kernel budget {m} is below d + 2 = {}",
                    n_features + 2
                )));
            }
        }
        Ok(())
    }
}

/// Reference rows that stand in for absent features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundSet {
    pub rows: Array2<f64>,
    pub seed: u64,
}

impl BackgroundSet {
    pub fn new(rows: Array2<f64>) -> Result<Self> {
        if rows.nrows() == 0 {
            return Err(ShapError::InvalidConfig("background set is empty".into()));
        }
        Ok(Self { rows, seed: 0 })
    }

    /// `min(k, n)` distinct rows of `x` chosen by a seeded shuffle.
    pub fn sample(x: &Array2<f64>, k: usize, seed: u64) -> Result<Self> {
        if k == 0 || x.nrows() == 0 {
            return Err(ShapError::InvalidConfig("background set is empty".into()));
        }
        let mut idx: Vec<usize> = (0..x.nrows()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        idx.truncate(k);
        Ok(Self { rows: x.select(ndarray::Axis(0), &idx), seed })
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    fn check(&self, d: usize) -> Result<()> {
        if self.rows.ncols() != d {
            return Err(ShapError::DimensionMismatch { expected: d, got: self.rows.ncols() });
        }
        Ok(())
    }
}

/// Additive explanation `g(x) = base_value + sum(phi)` of the scalar `fx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub base_value: f64,
    pub phi: Vec<f64>,
    pub fx: f64,
    pub feature_names: Vec<String>,
    pub class_index: usize,
    pub method: ExplainMethod,
}

impl Attribution {
    /// `base_value + sum(phi)`.
    pub fn surrogate(&self) -> f64 {
        self.base_value + self.phi.iter().sum::<f64>()
    }

    /// `|fx - g(x)|`.
    pub fn efficiency_gap(&self) -> f64 {
        (self.fx - self.surrogate()).abs()
    }
}

/// Value function of one explained row.
pub struct Game<'a, C: Classifier + ?Sized> {
    model: &'a C,
    x: &'a [f64],
    background: &'a BackgroundSet,
    class: usize,
    hybrid: Array2<f64>,
}

impl<'a, C: Classifier + ?Sized> Game<'a, C> {
    pub fn new(model: &'a C, x: &'a [f64], background: &'a BackgroundSet, class: usize) -> Result<Self> {
        let d = model.n_features();
        if x.len() != d {
            return Err(ShapError::DimensionMismatch { expected: d, got: x.len() });
        }
        background.check(d)?;
        Ok(Self { model, x, background, class, hybrid: background.rows.clone() })
    }

    pub fn n_features(&self) -> usize {
        self.x.len()
    }

    /// `f(x)` for the explained class.
    pub fn fx(&self) -> f64 {
        self.model.explained_output(self.x, self.class)
    }

    /// `v(S)`; bit `i` of `mask` puts feature `i` in `S`. The full set returns `f(x)` directly.
    pub fn value(&mut self, mask: u64) -> f64 {
        let d = self.n_features();
        if d < 64 && mask == (1u64 << d) - 1 {
            return self.fx();
        }
        self.hybrid.assign(&self.background.rows);
        for j in (0..d).filter(|j| mask >> j & 1 == 1) {
            self.hybrid.column_mut(j).fill(self.x[j]);
        }
        let out = self.model.explained_output_batch(&self.hybrid, self.class);
        out.iter().sum::<f64>() / out.len() as f64
    }
}

/// `v(S)` for an explicit feature subset.
pub fn value_function<C: Classifier + ?Sized>(
    model: &C,
    x: &[f64],
    subset: &[usize],
    background: &BackgroundSet,
    class: usize,
) -> Result<f64> {
    let mut game = Game::new(model, x, background, class)?;
    let mut mask = 0u64;
    for &j in subset {
        if j >= game.n_features() || j >= 64 {
            return Err(ShapError::InvalidConfig(format!("feature {j} out of range")));
        }
        mask |= 1 << j;
    }
    Ok(game.value(mask))
}

/// Explains one row with the configured method.
pub fn explain_row(
    model: &Model,
    x: &[f64],
    background: &BackgroundSet,
    config: &ExplainerConfig,
    feature_names: &[String],
) -> Result<Attribution> {
    let class = config.target.resolve(model, x)?;
    let mut a = match config.method {
        ExplainMethod::Exact => exact_shapley(model, x, background, class)?,
        ExplainMethod::Kernel => {
            let row_seed = config.seed ^ hash_row(x);
            kernel_shap(model, x, background, config.kernel_budget, row_seed, class)?
        }
        ExplainMethod::Tree => tree_shap(model, x, background, class)?,
    };
    a.feature_names = feature_names.to_vec();
    Ok(a)
}

fn hash_row(x: &[f64]) -> u64 {
    x.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, v| (h ^ v.to_bits()).wrapping_mul(0x0100_0000_01b3))
}

/// One attribution per row of `x_eval`, computed in parallel.
pub fn explain_batch(
    model: &Model,
    x_eval: &Array2<f64>,
    background: &BackgroundSet,
    config: &ExplainerConfig,
    feature_names: &[String],
) -> Result<Vec<Attribution>> {
    config.validate(model.n_features())?;
    if x_eval.ncols() != model.n_features() {
        return Err(ShapError::DimensionMismatch { expected: model.n_features(), got: x_eval.ncols() });
    }
    let rows: Vec<Vec<f64>> = x_eval.outer_iter().map(|r| r.to_vec()).collect();
    rows.par_iter()
        .enumerate()
        .map(|(index, x)| {
            explain_row(model, x, background, config, feature_names)
                .map_err(|e| ShapError::Row { index, source: Box::new(e) })
        })
        .collect()
}

/// Writes one row per attribution: `class,fx,phi0,phi_<feature>...`.
pub fn write_attributions_csv(attributions: &[Attribution], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |source| ShapError::Io { path: path.display().to_string(), source };
    let mut out = String::from("class,fx,phi0");
    if let Some(first) = attributions.first() {
        let d = first.phi.len();
        for j in 0..d {
            match first.feature_names.get(j) {
                Some(name) => out.push_str(&format!(",phi_{name}")),
                None => out.push_str(&format!(",phi_{}", j + 1)),
            }
        }
    }
    out.push('\n');
    for a in attributions {
        out.push_str(&format!("{},{},{}", a.class_index, a.fx, a.base_value));
        for p in &a.phi {
            out.push_str(&format!(",{p}"));
        }
        out.push('\n');
    }
    std::fs::File::create(path).and_then(|mut f| f.write_all(out.as_bytes())).map_err(io)
}

pub fn attributions_to_json(attributions: &[Attribution]) -> String {
    serde_json::to_string_pretty(attributions).expect("attributions serialize")
}

/// `1 / C(n, k)` without overflow for the sizes used here.
pub(crate) fn inv_binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    1.0 / c
}


#[cfg(test)]
mod tests {
    use super::testing::*;
    use super::*;

    #[test]
    fn value_function_examples() {
        let m = FnModel { d: 1, f: |x: &[f64]| 2.0 * x[0] };
        let bg = background(&[&[0.0], &[1.0]]);
        assert_eq!(value_function(&m, &[1.0], &[0], &bg, 1).unwrap(), 2.0);
        assert_eq!(value_function(&m, &[1.0], &[], &bg, 1).unwrap(), 1.0);
    }

    #[test]
    fn budget_serde() {
        assert_eq!(serde_json::to_string(&KernelBudget::Full).unwrap(), "\"full\"");
        assert_eq!(serde_json::from_str::<KernelBudget>("64").unwrap(), KernelBudget::Samples(64));
        assert!(serde_json::from_str::<KernelBudget>("\"half\"").is_err());
        let t: Target = serde_json::from_str("{\"class_index\":3}").unwrap();
        assert_eq!(t, Target::ClassIndex(3));
    }

    #[test]
    fn config_validation() {
        let cfg = ExplainerConfig { method: ExplainMethod::Kernel, kernel_budget: KernelBudget::Samples(5), ..Default::default() };
        assert!(cfg.validate(4).is_err());
        assert!(cfg.validate(3).is_ok());
        let cfg = ExplainerConfig { method: ExplainMethod::Exact, ..Default::default() };
        assert!(matches!(cfg.validate(21), Err(ShapError::TooManyFeatures(21))));
        let cfg = ExplainerConfig { background_size: 0, ..Default::default() };
        assert!(cfg.validate(2).is_err());
    }

    #[test]
    fn background_sampling_is_seeded_and_capped() {
        let x = Array2::from_shape_fn((10, 2), |(i, j)| (i * 2 + j) as f64);
        let a = BackgroundSet::sample(&x, 4, 3).unwrap();
        assert_eq!(a, BackgroundSet::sample(&x, 4, 3).unwrap());
        assert_eq!(a.len(), 4);
        assert_eq!(BackgroundSet::sample(&x, 50, 3).unwrap().len(), 10);
        assert!(BackgroundSet::sample(&x, 0, 3).is_err());
    }

    #[test]
    fn inverse_binomials() {
        assert_eq!(inv_binomial(4, 2), 1.0 / 6.0);
        assert_eq!(inv_binomial(5, 0), 1.0);
        assert!((inv_binomial(20, 10) - 1.0 / 184_756.0).abs() < 1e-18);
    }
}
