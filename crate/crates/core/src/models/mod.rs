//! Classifier families trained from scratch: random forest, Newton-boosted
//! trees, multilayer perceptron, and a one-vs-rest wrapper over any of them.

mod forest;
mod gbt;
mod mlp;
mod ovr;
pub mod tree;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datasets::TabularDataset;

pub use forest::{fit_random_forest, ForestModel, RfParams};
pub use gbt::{fit_gbt, GbtModel, GbtParams};
pub use mlp::{fit_mlp, DenseLayer, MlpModel, MlpOutput, MlpParams};
pub use ovr::{fit_ovr, OvrModel};
pub use tree::{Node, Tree};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("training data has a single class ({0}); need at least two")]
    SingleClass(String),
    #[error("class {0:?} is absent from the training split")]
    MissingClass(String),
    #[error("need at least 2 training rows, got {0}")]
    TooFewRows(usize),
    #[error("expected {expected} feature columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidParams(String),
    #[error("{0} only supports binary targets; wrap it in one-vs-rest for multiclass data")]
    BinaryOnly(&'static str),
    #[error("non-finite training loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("malformed model document: {0}")]
    Malformed(String),
    #[error("model json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// Scale on which a model's explained output is expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputScale {
    Probability,
    /// Log-odds.
    Margin,
}

/// Uniform prediction interface over every family.
pub trait Classifier: Sync {
    fn n_features(&self) -> usize;
    fn n_classes(&self) -> usize;

    /// Class scores for one row; each entry lies in [0, 1].
    fn predict_proba_row(&self, x: &[f64]) -> Vec<f64>;

    /// The scalar an explainer attributes for `class`: a probability for most
    /// families, the log-odds for boosted trees.
    fn explained_output(&self, x: &[f64], class: usize) -> f64;

    fn output_scale(&self) -> OutputScale;

    /// `explained_output` for every row of `x`.
    fn explained_output_batch(&self, x: &Array2<f64>, class: usize) -> Vec<f64> {
        x.outer_iter().map(|r| self.explained_output(&r.to_vec(), class)).collect()
    }

    fn predict_proba(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_width(x.ncols())?;
        let k = self.n_classes();
        let mut out = Array2::zeros((x.nrows(), k));
        for (i, row) in x.outer_iter().enumerate() {
            let p = self.predict_proba_row(&row.to_vec());
            out.row_mut(i).assign(&ndarray::ArrayView1::from(&p));
        }
        Ok(out)
    }

    fn predict(&self, x: &Array2<f64>) -> Result<Vec<usize>> {
        let proba = self.predict_proba(x)?;
        Ok(proba.outer_iter().map(|r| argmax(r.as_slice().expect("standard layout"))).collect())
    }

    fn check_width(&self, got: usize) -> Result<()> {
        if got != self.n_features() {
            return Err(ModelError::DimensionMismatch { expected: self.n_features(), got });
        }
        Ok(())
    }
}

/// Index of the largest entry; the first one wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// A tree ensemble whose explained output is `offset + scale * sum_t leaf_t(x)[leaf_index]`.
#[derive(Debug, Clone, Copy)]
pub struct AdditiveTrees<'a> {
    pub trees: &'a [Tree],
    pub leaf_index: usize,
    pub scale: f64,
    pub offset: f64,
}

impl AdditiveTrees<'_> {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.leaf_values(x)[self.leaf_index]).sum();
        self.offset + self.scale * sum
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    RandomForest,
    Gbt,
    Mlp,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 3] = [ModelFamily::RandomForest, ModelFamily::Gbt, ModelFamily::Mlp];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelFamily::RandomForest => "random_forest",
            ModelFamily::Gbt => "gbt",
            ModelFamily::Mlp => "mlp",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ModelFamily::RandomForest => "Random Forest",
            ModelFamily::Gbt => "Gradient Boosting",
            ModelFamily::Mlp => "MLP",
        }
    }

    pub fn is_tree_based(self) -> bool {
        matches!(self, ModelFamily::RandomForest | ModelFamily::Gbt)
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.as_str() == s)
    }
}

/// Hyperparameters for one family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FamilyParams {
    RandomForest(RfParams),
    Gbt(GbtParams),
    Mlp(MlpParams),
}

impl FamilyParams {
    pub fn default_for(family: ModelFamily) -> Self {
        match family {
            ModelFamily::RandomForest => FamilyParams::RandomForest(RfParams::default()),
            ModelFamily::Gbt => FamilyParams::Gbt(GbtParams::default()),
            ModelFamily::Mlp => FamilyParams::Mlp(MlpParams::default()),
        }
    }

    pub fn family(&self) -> ModelFamily {
        match self {
            FamilyParams::RandomForest(_) => ModelFamily::RandomForest,
            FamilyParams::Gbt(_) => ModelFamily::Gbt,
            FamilyParams::Mlp(_) => ModelFamily::Mlp,
        }
    }

    /// Fits a single model of this family on `train`.
    pub fn fit(&self, train: &TabularDataset, seed: u64) -> Result<Model> {
        Ok(match self {
            FamilyParams::RandomForest(p) => Model::RandomForest(fit_random_forest(train, p, seed)?),
            FamilyParams::Gbt(p) => Model::Gbt(fit_gbt(train, p, seed)?),
            FamilyParams::Mlp(p) => Model::Mlp(fit_mlp(train, p, seed)?),
        })
    }
}

/// Fits `params` on `train`, optionally inside a one-vs-rest wrapper.
pub fn fit_model(params: &FamilyParams, train: &TabularDataset, seed: u64, ovr: bool) -> Result<Model> {
    if ovr {
        Ok(Model::Ovr(fit_ovr(params, train, seed)?))
    } else {
        params.fit(train, seed)
    }
}

/// Any trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Model {
    RandomForest(ForestModel),
    Gbt(GbtModel),
    Mlp(MlpModel),
    Ovr(OvrModel),
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format_version: u32,
    model: Model,
}

impl Model {
    fn inner(&self) -> &dyn Classifier {
        match self {
            Model::RandomForest(m) => m,
            Model::Gbt(m) => m,
            Model::Mlp(m) => m,
            Model::Ovr(m) => m,
        }
    }

    /// Tree view of the explained output for `class`, if this model is a tree ensemble.
    pub fn additive_trees(&self, class: usize) -> Option<AdditiveTrees<'_>> {
        match self {
            Model::RandomForest(m) => Some(m.additive_trees(class)),
            Model::Gbt(m) => Some(m.additive_trees(class)),
            Model::Mlp(_) => None,
            Model::Ovr(m) => m.components.get(class)?.additive_trees(1),
        }
    }

    pub fn family_name(&self) -> String {
        match self {
            Model::RandomForest(_) => "random_forest".into(),
            Model::Gbt(_) => "gbt".into(),
            Model::Mlp(_) => "mlp".into(),
            Model::Ovr(m) => match m.components.first() {
                Some(c) => format!("ovr({})", c.family_name()),
                None => "ovr".into(),
            },
        }
    }

    /// Versioned JSON document.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ModelDocument { format_version: MODEL_FORMAT_VERSION, model: self.clone() })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(ModelError::Malformed(format!("unsupported format_version {}", doc.format_version)));
        }
        doc.model.validate()?;
        Ok(doc.model)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Model::RandomForest(m) => m.validate(),
            Model::Gbt(m) => m.validate(),
            Model::Mlp(m) => m.validate(),
            Model::Ovr(m) => {
                if m.components.len() != m.n_classes {
                    return Err(ModelError::Malformed("one-vs-rest component count differs from n_classes".into()));
                }
                m.components.iter().try_for_each(Model::validate)
            }
        }
    }
}

impl Classifier for Model {
    fn n_features(&self) -> usize {
        self.inner().n_features()
    }
    fn n_classes(&self) -> usize {
        self.inner().n_classes()
    }
    fn predict_proba_row(&self, x: &[f64]) -> Vec<f64> {
        self.inner().predict_proba_row(x)
    }
    fn explained_output(&self, x: &[f64], class: usize) -> f64 {
        self.inner().explained_output(x, class)
    }
    fn output_scale(&self) -> OutputScale {
        self.inner().output_scale()
    }
    fn explained_output_batch(&self, x: &Array2<f64>, class: usize) -> Vec<f64> {
        self.inner().explained_output_batch(x, class)
    }
    fn predict_proba(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.inner().predict_proba(x)
    }
}

pub(crate) fn require_two_classes(train: &TabularDataset) -> Result<()> {
    if train.n_samples() < 2 {
        return Err(ModelError::TooFewRows(train.n_samples()));
    }
    let counts = train.class_counts();
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        let only = counts.iter().position(|&c| c > 0).map_or_else(String::new, |c| train.class_names[c].clone());
        return Err(ModelError::SingleClass(only));
    }
    Ok(())
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
