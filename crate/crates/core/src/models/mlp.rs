use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{require_two_classes, sigmoid, Classifier, ModelError, OutputScale, Result};
use crate::datasets::TabularDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MlpOutput {
    /// One sigmoid unit per class (a single unit for binary data), trained with binary cross-entropy.
    Sigmoid,
    /// Softmax over classes, trained with categorical cross-entropy.
    Softmax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpParams {
    pub hidden_sizes: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub output: MlpOutput,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self { hidden_sizes: vec![64], epochs: 20, batch_size: 32, learning_rate: 1e-3, output: MlpOutput::Sigmoid }
    }
}

impl MlpParams {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_sizes.contains(&0) {
            return Err(ModelError::InvalidParams("hidden layer sizes must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(ModelError::InvalidParams("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ModelError::InvalidParams("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// `out = input . weights + bias`, weights shaped (inputs, outputs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// ReLU hidden layers over standardized inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layers: Vec<DenseLayer>,
    pub output: MlpOutput,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub n_classes: usize,
    pub params: MlpParams,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

pub fn fit_mlp(train: &TabularDataset, params: &MlpParams, seed: u64) -> Result<MlpModel> {
    params.validate()?;
    require_two_classes(train)?;
    let mut init_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(seed);
    shuffle_rng.set_stream(1);

    let mut model = MlpModel::initialize(train, params, &mut init_rng);
    let x = model.standardize(&train.x);
    let targets = model.targets(&train.y);
    let n = train.n_samples();

    let mut m: Vec<DenseLayer> = model.layers.iter().map(zeros_like).collect();
    let mut v: Vec<DenseLayer> = model.layers.iter().map(zeros_like).collect();
    let mut step = 0i32;
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 1..=params.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(params.batch_size) {
            let xb = x.select(Axis(0), batch);
            let tb = targets.select(Axis(0), batch);
            let (loss, grads) = model.loss_and_gradients(xb.view(), tb.view());
            if !loss.is_finite() {
                return Err(ModelError::NonFiniteLoss { epoch });
            }
            epoch_loss += loss * batch.len() as f64;
            step += 1;
            let bc1 = 1.0 - ADAM_BETA1.powi(step);
            let bc2 = 1.0 - ADAM_BETA2.powi(step);
            let lr = params.learning_rate;
            for (((layer, g), m), v) in model.layers.iter_mut().zip(&grads).zip(&mut m).zip(&mut v) {
                adam_update(layer.weights.view_mut(), g.weights.view(), m.weights.view_mut(), v.weights.view_mut(), lr, bc1, bc2);
                adam_update(layer.bias.view_mut(), g.bias.view(), m.bias.view_mut(), v.bias.view_mut(), lr, bc1, bc2);
            }
        }
        let mean_loss = epoch_loss / n as f64;
        if !mean_loss.is_finite() {
            return Err(ModelError::NonFiniteLoss { epoch });
        }
        log::debug!("mlp epoch {epoch}: loss {mean_loss:.6}");
    }
    Ok(model)
}

fn zeros_like(layer: &DenseLayer) -> DenseLayer {
    DenseLayer { weights: Array2::zeros(layer.weights.raw_dim()), bias: Array1::zeros(layer.bias.len()) }
}

fn adam_update<D: ndarray::Dimension>(
    mut param: ndarray::ArrayViewMut<f64, D>,
    grad: ndarray::ArrayView<f64, D>,
    mut m: ndarray::ArrayViewMut<f64, D>,
    mut v: ndarray::ArrayViewMut<f64, D>,
    lr: f64,
    bc1: f64,
    bc2: f64,
) {
    ndarray::Zip::from(&mut param).and(&grad).and(&mut m).and(&mut v).for_each(|p, &g, m, v| {
        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
        *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
        *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + ADAM_EPS);
    });
}

impl MlpModel {
    /// Glorot-uniform weights, zero biases, standardization from `train`.
    fn initialize<R: Rng>(train: &TabularDataset, params: &MlpParams, rng: &mut R) -> Self {
        let d = train.n_features();
        let n = train.n_samples() as f64;
        let mut mean = vec![0.0; d];
        let mut std = vec![1.0; d];
        for (j, col) in train.x.columns().into_iter().enumerate() {
            let mu = col.sum() / n;
            let var = col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
            mean[j] = mu;
            std[j] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        let n_out = output_units(params.output, train.n_classes());
        let mut sizes = vec![d];
        sizes.extend(&params.hidden_sizes);
        sizes.push(n_out);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
                DenseLayer {
                    weights: Array2::from_shape_fn((w[0], w[1]), |_| rng.random_range(-limit..limit)),
                    bias: Array1::zeros(w[1]),
                }
            })
            .collect();
        Self { layers, output: params.output, mean, std, n_classes: train.n_classes(), params: params.clone() }
    }

    pub fn n_outputs(&self) -> usize {
        self.layers.last().map_or(0, |l| l.bias.len())
    }

    pub fn standardize(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut z = x.clone();
        for (j, mut col) in z.columns_mut().into_iter().enumerate() {
            let (mu, sd) = (self.mean[j], self.std[j]);
            col.mapv_inplace(|v| (v - mu) / sd);
        }
        z
    }

    /// Training targets for the output layer: the positive indicator for a
    /// single sigmoid unit, one-hot otherwise.
    pub fn targets(&self, y: &[usize]) -> Array2<f64> {
        let k = self.n_outputs();
        let mut t = Array2::zeros((y.len(), k));
        for (i, &c) in y.iter().enumerate() {
            if k == 1 {
                t[[i, 0]] = c as f64;
            } else {
                t[[i, c]] = 1.0;
            }
        }
        t
    }

    /// Pre-activation of every layer for already-standardized inputs.
    fn forward(&self, x: ArrayView2<f64>) -> (Vec<Array2<f64>>, Vec<Array2<f64>>) {
        let mut acts = vec![x.to_owned()];
        let mut pre = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let z = acts[i].dot(&layer.weights) + &layer.bias;
            if i + 1 < self.layers.len() {
                acts.push(z.mapv(|v| v.max(0.0)));
            }
            pre.push(z);
        }
        (acts, pre)
    }

    fn logits(&self, x_std: ArrayView2<f64>) -> Array2<f64> {
        let mut a = x_std.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            a = a.dot(&layer.weights) + &layer.bias;
            if i + 1 < self.layers.len() {
                a.mapv_inplace(|v| v.max(0.0));
            }
        }
        a
    }

    /// Class scores for a batch of raw rows.
    pub fn predict_scores(&self, x: &Array2<f64>) -> Array2<f64> {
        let logits = self.logits(self.standardize(x).view());
        let mut out = Array2::zeros((x.nrows(), self.n_classes));
        for (mut o, z) in out.outer_iter_mut().zip(logits.outer_iter()) {
            let p = self.scores_from_logits(z.as_slice().expect("owned rows are contiguous"));
            o.assign(&ndarray::ArrayView1::from(&p));
        }
        out
    }

    fn scores_from_logits(&self, z: &[f64]) -> Vec<f64> {
        match self.output {
            MlpOutput::Sigmoid if z.len() == 1 => {
                let p = sigmoid(z[0]);
                vec![1.0 - p, p]
            }
            MlpOutput::Sigmoid => z.iter().map(|&v| sigmoid(v)).collect(),
            MlpOutput::Softmax => softmax(z),
        }
    }

    /// Mean loss over the batch and the gradient of every layer, for inputs
    /// that are already standardized.
    pub fn loss_and_gradients(&self, x_std: ArrayView2<f64>, targets: ArrayView2<f64>) -> (f64, Vec<DenseLayer>) {
        let b = x_std.nrows() as f64;
        let (acts, pre) = self.forward(x_std);
        let logits = pre.last().expect("at least one layer");
        let (loss, mut delta) = match self.output {
            MlpOutput::Sigmoid => {
                let count = b * logits.ncols() as f64;
                let mut loss = 0.0;
                let mut delta = Array2::zeros(logits.raw_dim());
                ndarray::Zip::from(&mut delta).and(logits).and(&targets).for_each(|d, &z, &t| {
                    loss += z.max(0.0) - z * t + (-z.abs()).exp().ln_1p();
                    *d = (sigmoid(z) - t) / count;
                });
                (loss / count, delta)
            }
            MlpOutput::Softmax => {
                let mut loss = 0.0;
                let mut delta = Array2::zeros(logits.raw_dim());
                for ((z, t), mut d) in logits.outer_iter().zip(targets.outer_iter()).zip(delta.outer_iter_mut()) {
                    let zmax = z.fold(f64::NEG_INFINITY, |a, &v| a.max(v));
                    let lse = zmax + z.iter().map(|&v| (v - zmax).exp()).sum::<f64>().ln();
                    for ((dk, &zk), &tk) in d.iter_mut().zip(z.iter()).zip(t.iter()) {
                        loss -= tk * (zk - lse);
                        *dk = ((zk - lse).exp() - tk) / b;
                    }
                }
                (loss / b, delta)
            }
        };

        let mut grads: Vec<DenseLayer> = Vec::with_capacity(self.layers.len());
        for l in (0..self.layers.len()).rev() {
            let gw = acts[l].t().dot(&delta);
            let gb = delta.sum_axis(Axis(0));
            grads.push(DenseLayer { weights: gw, bias: gb });
            if l > 0 {
                let mut back = delta.dot(&self.layers[l].weights.t());
                ndarray::Zip::from(&mut back).and(&pre[l - 1]).for_each(|g, &z| {
                    if z <= 0.0 {
                        *g = 0.0;
                    }
                });
                delta = back;
            }
        }
        grads.reverse();
        (loss, grads)
    }

    /// Total number of trainable parameters.
    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    fn locate(&self, mut idx: usize) -> (usize, Option<(usize, usize)>, usize) {
        for (li, l) in self.layers.iter().enumerate() {
            if idx < l.weights.len() {
                let cols = l.weights.ncols();
                return (li, Some((idx / cols, idx % cols)), 0);
            }
            idx -= l.weights.len();
            if idx < l.bias.len() {
                return (li, None, idx);
            }
            idx -= l.bias.len();
        }
        panic!("parameter index out of range");
    }

    /// Parameter `idx` in layer order, weights (row-major) before bias.
    pub fn param(&self, idx: usize) -> f64 {
        match self.locate(idx) {
            (l, Some(rc), _) => self.layers[l].weights[rc],
            (l, None, b) => self.layers[l].bias[b],
        }
    }

    pub fn set_param(&mut self, idx: usize, value: f64) {
        match self.locate(idx) {
            (l, Some(rc), _) => self.layers[l].weights[rc] = value,
            (l, None, b) => self.layers[l].bias[b] = value,
        }
    }

    /// Flattens gradients in the same order as [`MlpModel::param`].
    pub fn flatten(grads: &[DenseLayer]) -> Vec<f64> {
        grads.iter().flat_map(|g| g.weights.iter().chain(g.bias.iter()).copied()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(ModelError::Malformed("network has no layers".into()));
        }
        let mut width = self.mean.len();
        if self.std.len() != width || self.std.iter().any(|&s| !(s > 0.0)) {
            return Err(ModelError::Malformed("bad standardization parameters".into()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.weights.nrows() != width || l.bias.len() != l.weights.ncols() {
                return Err(ModelError::Malformed(format!("layer {i} does not chain")));
            }
            width = l.weights.ncols();
        }
        if width != output_units(self.output, self.n_classes) {
            return Err(ModelError::Malformed("output width does not match class count".into()));
        }
        Ok(())
    }
}

fn output_units(output: MlpOutput, n_classes: usize) -> usize {
    match output {
        MlpOutput::Sigmoid if n_classes == 2 => 1,
        _ => n_classes,
    }
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|&v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

impl Classifier for MlpModel {
    fn n_features(&self) -> usize {
        self.mean.len()
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_proba_row(&self, x: &[f64]) -> Vec<f64> {
        let row = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("row vector");
        self.predict_scores(&row).row(0).to_vec()
    }

    fn explained_output(&self, x: &[f64], class: usize) -> f64 {
        self.predict_proba_row(x)[class]
    }

    fn output_scale(&self) -> OutputScale {
        OutputScale::Probability
    }

    fn predict_proba(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_width(x.ncols())?;
        Ok(self.predict_scores(x))
    }

    fn explained_output_batch(&self, x: &Array2<f64>, class: usize) -> Vec<f64> {
        self.predict_scores(x).column(class).to_vec()
    }
}
