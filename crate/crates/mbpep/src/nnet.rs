//! Interval MLP base learners.
//!
//! Each learner is a feed-forward network with exactly two output heads.
//! In the default `Softplus` bound mode the heads parameterize
//! `lower = o1`, `upper = o1 + softplus(o2)`, so intervals can never cross;
//! `Raw` mode emits the heads directly as `(lower, upper)` for callers that
//! want the unconstrained form. Hidden layers use inverted dropout during
//! training (activations scaled by `1/retention`), so inference needs no
//! rescaling and a retention of 1.0 makes training and inference forward
//! passes bit-identical.
//!
//! Nothing here owns an RNG: callers pass one in, which keeps every random
//! draw attributable to a seed stream.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    Relu,
}

impl Activation {
    /// Default choice by depth: shallow nets saturate fine with sigmoid,
    /// deeper stacks need relu to keep gradients alive.
    pub fn for_hidden_count(n_hidden: usize) -> Activation {
        if n_hidden >= 2 {
            Activation::Relu
        } else {
            Activation::Sigmoid
        }
    }

    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => crate::piloss::sigmoid(z),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative as a function of the pre-activation.
    fn grad(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => {
                let s = crate::piloss::sigmoid(z);
                s * (1.0 - s)
            }
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// How the two output heads become an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMode {
    /// `lower = o1`, `upper = o1 + softplus(o2)`: width is positive by
    /// construction.
    #[default]
    Softplus,
    /// `lower = o1`, `upper = o2`, unconstrained; intervals may cross.
    Raw,
}

/// Numerically safe `ln(1 + e^x)`.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Predicted interval bounds for a batch, one entry per input row.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Inverted-dropout masks, one matrix per hidden layer. Entries are the
/// scale applied to each activation: `0.0` (dropped) or `1/retention`.
#[derive(Debug, Clone)]
pub struct DropoutMasks {
    layers: Vec<Matrix>,
}

impl DropoutMasks {
    pub fn layers(&self) -> &[Matrix] {
        &self.layers
    }
}

/// Everything the backward pass needs from a forward pass: pre-activations
/// per layer, post-dropout activations per hidden layer, and the masks that
/// were applied (if any).
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pre: Vec<Matrix>,
    post: Vec<Matrix>,
    masks: Option<DropoutMasks>,
}

impl ForwardTrace {
    /// The raw two-column output head values before bound mapping.
    pub fn raw_outputs(&self) -> &Matrix {
        self.pre.last().expect("trace always has an output layer")
    }

    pub fn masks(&self) -> Option<&DropoutMasks> {
        self.masks.as_ref()
    }
}

/// Per-parameter gradients, summed over the batch, shaped like the learner.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub d_weights: Vec<Matrix>,
    pub d_biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn is_finite(&self) -> bool {
        self.d_weights
            .iter()
            .all(|m| m.data().iter().all(|v| v.is_finite()))
            && self
                .d_biases
                .iter()
                .all(|b| b.iter().all(|v| v.is_finite()))
    }
}

#[derive(Debug, Clone)]
pub struct BaseLearner {
    layer_dims: Vec<usize>,
    weights: Vec<Matrix>, // per layer, fan_in x fan_out
    biases: Vec<Vec<f64>>,
    activation: Activation,
    bound_mode: BoundMode,
    dropout_retention: f64,
}

impl BaseLearner {
    /// Fresh learner with seeded weights. Sigmoid nets draw uniformly from
    /// `±sqrt(6 / (fan_in + fan_out))`; relu nets draw from
    /// `Normal(0, sqrt(2 / fan_in))`. Biases start at zero.
    pub fn init(
        layer_dims: &[usize],
        activation: Activation,
        bound_mode: BoundMode,
        dropout_retention: f64,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        check_dims(layer_dims)?;
        check_retention(dropout_retention)?;
        let mut weights = Vec::with_capacity(layer_dims.len() - 1);
        let mut biases = Vec::with_capacity(layer_dims.len() - 1);
        for win in layer_dims.windows(2) {
            let (fan_in, fan_out) = (win[0], win[1]);
            let mut w = Matrix::zeros(fan_in, fan_out);
            match activation {
                Activation::Sigmoid => {
                    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
                    for v in w.data_mut() {
                        *v = rng.random_range(-a..a);
                    }
                }
                Activation::Relu => {
                    let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt())
                        .expect("std is positive and finite");
                    for v in w.data_mut() {
                        *v = normal.sample(rng);
                    }
                }
            }
            weights.push(w);
            biases.push(vec![0.0; fan_out]);
        }
        Ok(BaseLearner {
            layer_dims: layer_dims.to_vec(),
            weights,
            biases,
            activation,
            bound_mode,
            dropout_retention,
        })
    }

    /// Rebuilds a learner from explicit parameters (model loading). All
    /// shapes are validated against `layer_dims` and every value must be
    /// finite.
    pub fn from_parts(
        layer_dims: Vec<usize>,
        weights: Vec<Matrix>,
        biases: Vec<Vec<f64>>,
        activation: Activation,
        bound_mode: BoundMode,
        dropout_retention: f64,
    ) -> Result<Self> {
        check_dims(&layer_dims)?;
        check_retention(dropout_retention)?;
        if weights.len() != layer_dims.len() - 1 || biases.len() != layer_dims.len() - 1 {
            return Err(Error::Shape(format!(
                "expected {} weight/bias layers, got {}/{}",
                layer_dims.len() - 1,
                weights.len(),
                biases.len()
            )));
        }
        for (i, win) in layer_dims.windows(2).enumerate() {
            if weights[i].rows() != win[0] || weights[i].cols() != win[1] {
                return Err(Error::Shape(format!(
                    "layer {i} weights are {}x{}, expected {}x{}",
                    weights[i].rows(),
                    weights[i].cols(),
                    win[0],
                    win[1]
                )));
            }
            if biases[i].len() != win[1] {
                return Err(Error::Shape(format!(
                    "layer {i} bias length {} != {}",
                    biases[i].len(),
                    win[1]
                )));
            }
            if weights[i].data().iter().any(|v| !v.is_finite())
                || biases[i].iter().any(|v| !v.is_finite())
            {
                return Err(Error::Data(format!("non-finite parameter in layer {i}")));
            }
        }
        Ok(BaseLearner {
            layer_dims,
            weights,
            biases,
            activation,
            bound_mode,
            dropout_retention,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn bound_mode(&self) -> BoundMode {
        self.bound_mode
    }

    pub fn dropout_retention(&self) -> f64 {
        self.dropout_retention
    }

    pub fn n_params(&self) -> usize {
        self.weights
            .iter()
            .map(|w| w.data().len())
            .chain(self.biases.iter().map(|b| b.len()))
            .sum()
    }

    fn n_hidden(&self) -> usize {
        self.layer_dims.len() - 2
    }

    /// Draws fresh inverted-dropout masks for a batch of `n_rows` inputs.
    /// Draw order is fixed (layer by layer, row-major), so a given RNG
    /// state always yields the same masks.
    pub fn sample_masks(&self, n_rows: usize, rng: &mut impl Rng) -> DropoutMasks {
        let keep = self.dropout_retention;
        let layers = (0..self.n_hidden())
            .map(|h| {
                let mut m = Matrix::zeros(n_rows, self.layer_dims[h + 1]);
                for v in m.data_mut() {
                    *v = if rng.random::<f64>() < keep {
                        1.0 / keep
                    } else {
                        0.0
                    };
                }
                m
            })
            .collect();
        DropoutMasks { layers }
    }

    /// Training-mode forward pass: samples dropout masks from `rng` (none
    /// when retention is 1.0) and records a full trace for backprop.
    pub fn forward_train(
        &self,
        inputs: &Matrix,
        rng: &mut impl Rng,
    ) -> Result<(ForwardTrace, Bounds)> {
        let masks = if self.dropout_retention < 1.0 {
            Some(self.sample_masks(inputs.rows(), rng))
        } else {
            None
        };
        self.forward_with_masks(inputs, masks)
    }

    /// Forward pass under explicit masks (`None` = no dropout). Exposed so
    /// a finite-difference check can re-evaluate the same stochastic pass.
    pub fn forward_with_masks(
        &self,
        inputs: &Matrix,
        masks: Option<DropoutMasks>,
    ) -> Result<(ForwardTrace, Bounds)> {
        if inputs.cols() != self.layer_dims[0] {
            return Err(Error::Shape(format!(
                "input has {} columns, learner expects {}",
                inputs.cols(),
                self.layer_dims[0]
            )));
        }
        if let Some(m) = &masks {
            if m.layers.len() != self.n_hidden() {
                return Err(Error::Shape(format!(
                    "{} dropout masks for {} hidden layers",
                    m.layers.len(),
                    self.n_hidden()
                )));
            }
            for (h, layer) in m.layers.iter().enumerate() {
                if layer.rows() != inputs.rows() || layer.cols() != self.layer_dims[h + 1] {
                    return Err(Error::Shape(format!(
                        "mask {h} is {}x{}, expected {}x{}",
                        layer.rows(),
                        layer.cols(),
                        inputs.rows(),
                        self.layer_dims[h + 1]
                    )));
                }
            }
        }

        let n_layers = self.weights.len();
        let mut pre = Vec::with_capacity(n_layers);
        let mut post = Vec::with_capacity(n_layers.saturating_sub(1));
        let mut current = inputs;
        let mut owned; // keeps the activation of the previous layer alive
        for l in 0..n_layers {
            let mut z = current.matmul(&self.weights[l])?;
            for i in 0..z.rows() {
                let row = z.row_mut(i);
                for (j, b) in self.biases[l].iter().enumerate() {
                    row[j] += b;
                }
            }
            pre.push(z.clone());
            if l + 1 < n_layers {
                for v in z.data_mut() {
                    *v = self.activation.apply(*v);
                }
                if let Some(m) = &masks {
                    let scale = m.layers[l].data();
                    for (v, s) in z.data_mut().iter_mut().zip(scale) {
                        *v *= s;
                    }
                }
                post.push(z.clone());
                owned = z;
                current = &owned;
            }
        }

        let raw = pre.last().expect("at least one layer");
        let n = raw.rows();
        let mut lower = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n);
        for i in 0..n {
            let (o1, o2) = (raw.get(i, 0), raw.get(i, 1));
            match self.bound_mode {
                BoundMode::Softplus => {
                    lower.push(o1);
                    upper.push(o1 + softplus(o2));
                }
                BoundMode::Raw => {
                    lower.push(o1);
                    upper.push(o2);
                }
            }
        }
        Ok((
            ForwardTrace { pre, post, masks },
            Bounds { lower, upper },
        ))
    }

    /// Inference: no dropout, no trace.
    pub fn predict(&self, inputs: &Matrix) -> Result<Bounds> {
        self.forward_with_masks(inputs, None).map(|(_, b)| b)
    }

    /// Backpropagates per-sample bound gradients into parameter gradients
    /// (summed over the batch). `trace` must come from a forward pass of
    /// this learner over the same `inputs`.
    pub fn backward(
        &self,
        inputs: &Matrix,
        trace: &ForwardTrace,
        d_lower: &[f64],
        d_upper: &[f64],
    ) -> Result<Gradients> {
        let n = inputs.rows();
        if d_lower.len() != n || d_upper.len() != n {
            return Err(Error::Shape(format!(
                "bound gradients have lengths {}/{}, batch has {n} rows",
                d_lower.len(),
                d_upper.len()
            )));
        }
        if trace.pre.len() != self.weights.len()
            || trace.pre.last().map(|m| (m.rows(), m.cols())) != Some((n, 2))
        {
            return Err(Error::Shape(
                "forward trace does not match this learner/batch".into(),
            ));
        }

        // Bound gradients -> raw output-head gradients.
        let raw = trace.raw_outputs();
        let mut delta = Matrix::zeros(n, 2);
        for i in 0..n {
            match self.bound_mode {
                BoundMode::Softplus => {
                    // lower = o1, upper = o1 + softplus(o2)
                    delta.set(i, 0, d_lower[i] + d_upper[i]);
                    delta.set(i, 1, d_upper[i] * crate::piloss::sigmoid(raw.get(i, 1)));
                }
                BoundMode::Raw => {
                    delta.set(i, 0, d_lower[i]);
                    delta.set(i, 1, d_upper[i]);
                }
            }
        }

        let mut d_weights: Vec<Matrix> = self
            .weights
            .iter()
            .map(|w| Matrix::zeros(w.rows(), w.cols()))
            .collect();
        let mut d_biases: Vec<Vec<f64>> = self.biases.iter().map(|b| vec![0.0; b.len()]).collect();

        for l in (0..self.weights.len()).rev() {
            let a_prev: &Matrix = if l == 0 { inputs } else { &trace.post[l - 1] };
            // dW[j][k] = sum_n a_prev[n][j] * delta[n][k]; db[k] = sum_n delta[n][k]
            for i in 0..n {
                let a_row = a_prev.row(i);
                let d_row = delta.row(i);
                for (j, &a) in a_row.iter().enumerate() {
                    let w_row = d_weights[l].row_mut(j);
                    for (k, &d) in d_row.iter().enumerate() {
                        w_row[k] += a * d;
                    }
                }
                for (k, &d) in d_row.iter().enumerate() {
                    d_biases[l][k] += d;
                }
            }
            if l == 0 {
                break;
            }
            // delta_prev = (delta * W^T) ⊙ mask_scale ⊙ act'(pre)
            let mut prev = Matrix::zeros(n, self.layer_dims[l]);
            for i in 0..n {
                let d_row = delta.row(i);
                let prev_row = prev.row_mut(i);
                for j in 0..self.layer_dims[l] {
                    let w_row = self.weights[l].row(j);
                    let mut acc = 0.0;
                    for (k, &d) in d_row.iter().enumerate() {
                        acc += d * w_row[k];
                    }
                    prev_row[j] = acc;
                }
            }
            if let Some(m) = &trace.masks {
                for (v, s) in prev.data_mut().iter_mut().zip(m.layers[l - 1].data()) {
                    *v *= s;
                }
            }
            let pre = &trace.pre[l - 1];
            for (v, &z) in prev.data_mut().iter_mut().zip(pre.data()) {
                *v *= self.activation.grad(z);
            }
            delta = prev;
        }

        Ok(Gradients {
            d_weights,
            d_biases,
        })
    }

    /// One optimizer step. Rejects non-finite or mis-shaped gradients
    /// without touching any parameter.
    pub fn apply_update(&mut self, grads: &Gradients, opt: &mut OptimizerState) -> Result<()> {
        if grads.d_weights.len() != self.weights.len()
            || grads.d_biases.len() != self.biases.len()
        {
            return Err(Error::Shape("gradient layer count mismatch".into()));
        }
        for l in 0..self.weights.len() {
            if grads.d_weights[l].rows() != self.weights[l].rows()
                || grads.d_weights[l].cols() != self.weights[l].cols()
                || grads.d_biases[l].len() != self.biases[l].len()
            {
                return Err(Error::Shape(format!("gradient shape mismatch in layer {l}")));
            }
        }
        if !grads.is_finite() {
            return Err(Error::Data("non-finite gradient, update rejected".into()));
        }
        opt.step(
            self.weights.iter_mut().map(|w| w.data_mut()),
            self.biases.iter_mut().map(|b| b.as_mut_slice()),
            grads,
        )
    }
}

fn check_dims(layer_dims: &[usize]) -> Result<()> {
    if layer_dims.len() < 2 {
        return Err(Error::InvalidArgument(
            "layer_dims needs at least an input and an output layer".into(),
        ));
    }
    if layer_dims.iter().any(|&d| d == 0) {
        return Err(Error::InvalidArgument("zero-width layer".into()));
    }
    if *layer_dims.last().unwrap() != 2 {
        return Err(Error::InvalidArgument(format!(
            "output layer must have exactly 2 heads, got {}",
            layer_dims.last().unwrap()
        )));
    }
    Ok(())
}

fn check_retention(r: f64) -> Result<()> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "dropout retention must lie in (0, 1], got {r}"
        )));
    }
    Ok(())
}

/// Optimizer family plus its fixed hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
}

impl OptimizerKind {
    pub fn adam_defaults() -> OptimizerKind {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// The template stored in a training config: what optimizer to build for
/// each learner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSpec {
    #[serde(flatten)]
    pub kind: OptimizerKind,
    pub learning_rate: f64,
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        OptimizerSpec {
            kind: OptimizerKind::adam_defaults(),
            learning_rate: 0.01,
        }
    }
}

impl OptimizerSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be finite and > 0, got {}",
                self.learning_rate
            )));
        }
        if let OptimizerKind::Adam {
            beta1,
            beta2,
            epsilon,
        } = self.kind
        {
            if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) {
                return Err(Error::InvalidArgument(format!(
                    "adam betas must lie in [0, 1), got {beta1}/{beta2}"
                )));
            }
            if !epsilon.is_finite() || epsilon <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "adam epsilon must be finite and > 0, got {epsilon}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-learner optimizer state: the settings plus (for Adam) first/second
/// moment buffers shaped like the parameters, and a step counter for bias
/// correction.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    spec: OptimizerSpec,
    step_count: u64,
    m_weights: Vec<Matrix>,
    v_weights: Vec<Matrix>,
    m_biases: Vec<Vec<f64>>,
    v_biases: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(spec: OptimizerSpec, learner: &BaseLearner) -> Result<Self> {
        spec.validate()?;
        let (m_weights, v_weights, m_biases, v_biases) = match spec.kind {
            OptimizerKind::Sgd => (Vec::new(), Vec::new(), Vec::new(), Vec::new()),
            OptimizerKind::Adam { .. } => (
                learner
                    .weights()
                    .iter()
                    .map(|w| Matrix::zeros(w.rows(), w.cols()))
                    .collect(),
                learner
                    .weights()
                    .iter()
                    .map(|w| Matrix::zeros(w.rows(), w.cols()))
                    .collect(),
                learner.biases().iter().map(|b| vec![0.0; b.len()]).collect(),
                learner.biases().iter().map(|b| vec![0.0; b.len()]).collect(),
            ),
        };
        Ok(OptimizerState {
            spec,
            step_count: 0,
            m_weights,
            v_weights,
            m_biases,
            v_biases,
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    fn step<'a>(
        &mut self,
        weights: impl Iterator<Item = &'a mut [f64]>,
        biases: impl Iterator<Item = &'a mut [f64]>,
        grads: &Gradients,
    ) -> Result<()> {
        let lr = self.spec.learning_rate;
        match self.spec.kind {
            OptimizerKind::Sgd => {
                for (w, g) in weights.zip(&grads.d_weights) {
                    for (p, &gv) in w.iter_mut().zip(g.data()) {
                        *p -= lr * gv;
                    }
                }
                for (b, g) in biases.zip(&grads.d_biases) {
                    for (p, &gv) in b.iter_mut().zip(g) {
                        *p -= lr * gv;
                    }
                }
            }
            OptimizerKind::Adam {
                beta1,
                beta2,
                epsilon,
            } => {
                let t = self.step_count + 1;
                let bc1 = 1.0 - beta1.powi(t as i32);
                let bc2 = 1.0 - beta2.powi(t as i32);
                let adam = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    let m_hat = *m / bc1;
                    let v_hat = *v / bc2;
                    *p -= lr * m_hat / (v_hat.sqrt() + epsilon);
                };
                for ((w, g), (m, v)) in weights
                    .zip(&grads.d_weights)
                    .zip(self.m_weights.iter_mut().zip(&mut self.v_weights))
                {
                    for (((p, &gv), mv), vv) in w
                        .iter_mut()
                        .zip(g.data())
                        .zip(m.data_mut())
                        .zip(v.data_mut())
                    {
                        adam(p, gv, mv, vv);
                    }
                }
                for ((b, g), (m, v)) in biases
                    .zip(&grads.d_biases)
                    .zip(self.m_biases.iter_mut().zip(&mut self.v_biases))
                {
                    for (((p, &gv), mv), vv) in
                        b.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut())
                    {
                        adam(p, gv, mv, vv);
                    }
                }
            }
        }
        self.step_count += 1;
        Ok(())
    }
}
