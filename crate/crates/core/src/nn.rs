//! Dense ReLU network with a softmax head, trained by momentum SGD on
//! categorical cross-entropy.
//!
//! Weights are stored as `[fan_in × fan_out]` matrices so that a batch of row
//! vectors `X [b × fan_in]` maps to `X·W + b`. All arithmetic is `f64`.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::distributions::{Distribution, Uniform};

use crate::error::{Error, Result};
use crate::rng;

/// Lower clamp applied to probabilities before taking the logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

/// Network shape: `input_dim → hidden_dims… → num_classes`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpConfig {
    input_dim: usize,
    hidden_dims: Vec<usize>,
    num_classes: usize,
}

impl MlpConfig {
    pub fn new(input_dim: usize, hidden_dims: Vec<usize>, num_classes: usize) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidConfig("input_dim must be > 0".into()));
        }
        if hidden_dims.contains(&0) {
            return Err(Error::InvalidConfig(
                "hidden layer widths must be > 0".into(),
            ));
        }
        if num_classes < 2 {
            return Err(Error::InvalidConfig("num_classes must be >= 2".into()));
        }
        Ok(Self {
            input_dim,
            hidden_dims,
            num_classes,
        })
    }

    /// 784 → 200 → 200 → 200 → 7.
    pub fn skin_lesion() -> Self {
        Self {
            input_dim: 784,
            hidden_dims: vec![200, 200, 200],
            num_classes: 7,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dims(&self) -> &[usize] {
        &self.hidden_dims
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// `(fan_in, fan_out)` of every layer, output layer last.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 2);
        dims.push(self.input_dim);
        dims.extend_from_slice(&self.hidden_dims);
        dims.push(self.num_classes);
        dims.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// Weights and biases of one dense layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
}

impl Dense {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weights: Array2::zeros((fan_in, fan_out)),
            biases: Array1::zeros(fan_out),
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weights.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.ncols()
    }

    fn same_shape(&self, other: &Dense) -> bool {
        self.weights.dim() == other.weights.dim() && self.biases.len() == other.biases.len()
    }
}

fn check_same_shape(context: &'static str, a: &[Dense], b: &[Dense]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch {
            context,
            expected: a.len(),
            actual: b.len(),
        });
    }
    for (x, y) in a.iter().zip(b) {
        if !x.same_shape(y) {
            return Err(Error::ShapeMismatch {
                context,
                expected: x.weights.len() + x.biases.len(),
                actual: y.weights.len() + y.biases.len(),
            });
        }
    }
    Ok(())
}

fn flatten(layers: &[Dense]) -> Vec<f64> {
    let mut out = Vec::new();
    for l in layers {
        out.extend(l.weights.iter().copied());
        out.extend(l.biases.iter().copied());
    }
    out
}

/// Parameters of the whole network, input layer first.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    layers: Vec<Dense>,
}

impl ModelParams {
    /// Builds parameters from explicit layers, checking that shapes chain.
    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidConfig(
                "a network needs at least one layer".into(),
            ));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.biases.len() != l.fan_out() {
                return Err(Error::ShapeMismatch {
                    context: "layer biases",
                    expected: l.fan_out(),
                    actual: l.biases.len(),
                });
            }
            if let Some(next) = layers.get(i + 1) {
                if next.fan_in() != l.fan_out() {
                    return Err(Error::ShapeMismatch {
                        context: "layer chaining",
                        expected: l.fan_out(),
                        actual: next.fan_in(),
                    });
                }
            }
            if l.weights
                .iter()
                .chain(l.biases.iter())
                .any(|v| !v.is_finite())
            {
                return Err(Error::InvalidConfig(format!(
                    "layer {i} has non-finite values"
                )));
            }
        }
        Ok(Self { layers })
    }

    /// All-zero parameters for `config`.
    pub fn zeros(config: &MlpConfig) -> Self {
        Self {
            layers: config
                .layer_shapes()
                .into_iter()
                .map(|(i, o)| Dense::zeros(i, o))
                .collect(),
        }
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn num_classes(&self) -> usize {
        self.layers[self.layers.len() - 1].fan_out()
    }

    pub fn num_parameters(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Every weight then bias of each layer in order, row-major.
    pub fn flatten(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn same_shape(&self, other: &ModelParams) -> bool {
        check_same_shape("params", &self.layers, &other.layers).is_ok()
    }

    pub(crate) fn check_shape(&self, context: &'static str, other: &[Dense]) -> Result<()> {
        check_same_shape(context, &self.layers, other)
    }
}

/// Gradient of the loss with respect to every parameter of a [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    layers: Vec<Dense>,
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        Self {
            layers: params
                .layers
                .iter()
                .map(|l| Dense::zeros(l.fan_in(), l.fan_out()))
                .collect(),
        }
    }

    pub fn from_layers(layers: Vec<Dense>) -> Self {
        Self { layers }
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn flatten(&self) -> Vec<f64> {
        flatten(&self.layers)
    }
}

/// Classical momentum: `v ← μ·v − η·g`, `θ ← θ + v`.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    velocity: Vec<Dense>,
    learning_rate: f64,
    momentum: f64,
}

impl OptimizerState {
    /// Zero velocity shaped like `params`.
    pub fn new(params: &ModelParams, learning_rate: f64, momentum: f64) -> Result<Self> {
        if !(learning_rate >= 0.0 && learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be finite and >= 0, got {learning_rate}"
            )));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::InvalidConfig(format!(
                "momentum must lie in [0, 1), got {momentum}"
            )));
        }
        Ok(Self {
            velocity: Gradients::zeros_like(params).layers,
            learning_rate,
            momentum,
        })
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn momentum(&self) -> f64 {
        self.momentum
    }

    pub fn velocity(&self) -> &[Dense] {
        &self.velocity
    }

    /// In-place update of `params` and the velocity.
    pub fn step(&mut self, params: &mut ModelParams, grads: &Gradients) -> Result<()> {
        params.check_shape("sgd_step gradients", &grads.layers)?;
        params.check_shape("sgd_step velocity", &self.velocity)?;
        let (mu, lr) = (self.momentum, self.learning_rate);
        for ((p, g), v) in params
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.velocity)
        {
            Zip::from(&mut p.weights)
                .and(&mut v.weights)
                .and(&g.weights)
                .for_each(|p, v, &g| {
                    *v = mu * *v - lr * g;
                    *p += *v;
                });
            Zip::from(&mut p.biases)
                .and(&mut v.biases)
                .and(&g.biases)
                .for_each(|p, v, &g| {
                    *v = mu * *v - lr * g;
                    *p += *v;
                });
        }
        Ok(())
    }
}

/// A mini-batch of feature rows with their class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    features: Array2<f64>,
    labels: Vec<usize>,
}

impl Batch {
    pub fn new(features: Array2<f64>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::InvalidData(
                "batch must contain at least one row".into(),
            ));
        }
        if features.nrows() != labels.len() {
            return Err(Error::ShapeMismatch {
                context: "batch labels",
                expected: features.nrows(),
                actual: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::ClassOutOfRange {
                index: bad,
                num_classes,
            });
        }
        if features.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidData(
                "batch features must lie in [0, 1]".into(),
            ));
        }
        Ok(Self { features, labels })
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_parts(features: Array2<f64>, labels: Vec<usize>) -> Self {
        debug_assert_eq!(features.nrows(), labels.len());
        Self { features, labels }
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Glorot-uniform weights, zero biases.
pub fn init_params(config: &MlpConfig, seed: u64) -> ModelParams {
    let mut rng = rng::rng(seed);
    let layers = config
        .layer_shapes()
        .into_iter()
        .map(|(fan_in, fan_out)| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit);
            Dense {
                weights: Array2::from_shape_simple_fn((fan_in, fan_out), || dist.sample(&mut rng)),
                biases: Array1::zeros(fan_out),
            }
        })
        .collect();
    ModelParams { layers }
}

fn check_width(params: &ModelParams, features: &ArrayView2<'_, f64>) -> Result<()> {
    if features.ncols() != params.input_dim() {
        return Err(Error::ShapeMismatch {
            context: "feature width",
            expected: params.input_dim(),
            actual: features.ncols(),
        });
    }
    Ok(())
}

fn affine(input: &ArrayView2<'_, f64>, layer: &Dense) -> Array2<f64> {
    let mut z = input.dot(&layer.weights);
    z += &layer.biases;
    z
}

/// Row-wise softmax with max subtraction, in place.
pub(crate) fn softmax_rows(logits: &mut Array2<f64>) {
    for mut row in logits.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
}

/// Hidden activations of every layer plus the output probabilities.
fn forward_trace(
    params: &ModelParams,
    features: ArrayView2<'_, f64>,
) -> (Vec<Array2<f64>>, Array2<f64>) {
    let last = params.layers.len() - 1;
    let mut hidden: Vec<Array2<f64>> = Vec::with_capacity(last);
    for (i, layer) in params.layers.iter().enumerate() {
        let input = if i == 0 {
            features
        } else {
            hidden[i - 1].view()
        };
        let mut z = affine(&input, layer);
        if i == last {
            softmax_rows(&mut z);
            return (hidden, z);
        }
        z.mapv_inplace(|v| v.max(0.0));
        hidden.push(z);
    }
    unreachable!("ModelParams always holds at least one layer")
}

/// Class probabilities `[b × num_classes]` for each feature row.
pub fn forward(params: &ModelParams, features: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    check_width(params, &features)?;
    Ok(forward_trace(params, features).1)
}

/// Mean categorical cross-entropy of `probs` against `labels`.
pub fn loss(probs: ArrayView2<'_, f64>, labels: &[usize]) -> Result<f64> {
    if probs.nrows() != labels.len() {
        return Err(Error::ShapeMismatch {
            context: "loss labels",
            expected: probs.nrows(),
            actual: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::InvalidData("loss of an empty batch".into()));
    }
    let mut total = 0.0;
    for (row, &label) in probs.rows().into_iter().zip(labels) {
        let p = *row.get(label).ok_or(Error::ClassOutOfRange {
            index: label,
            num_classes: probs.ncols(),
        })?;
        total -= p.max(PROB_FLOOR).ln();
    }
    Ok(total / labels.len() as f64)
}

/// Loss and its gradient, averaged over the batch.
pub fn backward(params: &ModelParams, batch: &Batch) -> Result<(f64, Gradients)> {
    let features = batch.features();
    check_width(params, &features)?;
    let num_classes = params.num_classes();
    if let Some(&bad) = batch.labels.iter().find(|&&l| l >= num_classes) {
        return Err(Error::ClassOutOfRange {
            index: bad,
            num_classes,
        });
    }
    let (hidden, probs) = forward_trace(params, features);
    let value = loss(probs.view(), &batch.labels)?;

    // d(loss)/d(logits) = (p − onehot) / b
    let scale = 1.0 / batch.len() as f64;
    let mut delta = probs;
    for (mut row, &label) in delta.rows_mut().into_iter().zip(&batch.labels) {
        row[label] -= 1.0;
        row *= scale;
    }

    let mut grads: Vec<Dense> = Vec::with_capacity(params.layers.len());
    for i in (0..params.layers.len()).rev() {
        let input = if i == 0 {
            features
        } else {
            hidden[i - 1].view()
        };
        let weights = input.t().dot(&delta);
        let biases = delta.sum_axis(Axis(0));
        if i > 0 {
            let mut upstream = delta.dot(&params.layers[i].weights.t());
            Zip::from(&mut upstream)
                .and(&hidden[i - 1])
                .for_each(|d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
            delta = upstream;
        }
        grads.push(Dense { weights, biases });
    }
    grads.reverse();
    Ok((value, Gradients { layers: grads }))
}

/// Pure momentum-SGD step returning new parameters and optimizer state.
pub fn sgd_step(
    params: &ModelParams,
    grads: &Gradients,
    state: &OptimizerState,
) -> Result<(ModelParams, OptimizerState)> {
    let mut params = params.clone();
    let mut state = state.clone();
    state.step(&mut params, grads)?;
    Ok((params, state))
}

/// Index of the largest entry of each row; ties go to the lowest index.
pub fn argmax_rows(probs: ArrayView2<'_, f64>) -> Vec<usize> {
    probs
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Most probable class of every feature row.
pub fn predict(params: &ModelParams, features: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
    Ok(argmax_rows(forward(params, features)?.view()))
}
