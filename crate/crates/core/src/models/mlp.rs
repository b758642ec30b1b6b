//! Multilayer perceptron regressor: logistic-sigmoid hidden layers, one
//! linear output unit, min-max scaled inputs and target, trained by
//! per-instance stochastic gradient descent with momentum.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scaler::FeatureScaler;
use super::ModelError;
use crate::dataset::{FeatureMatrix, Target};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig { hidden: vec![10], learning_rate: 0.3, momentum: 0.2, epochs: 500, seed: 1 }
    }
}

impl MlpConfig {
    pub fn with_hidden(hidden: &[usize]) -> Self {
        MlpConfig { hidden: hidden.to_vec(), ..MlpConfig::default() }
    }

    /// "10", "10-10", or "linear-unit" when there is no hidden layer.
    pub fn shape_label(&self) -> String {
        if self.hidden.is_empty() {
            "linear-unit".into()
        } else {
            self.hidden.iter().map(|h| h.to_string()).collect::<Vec<_>>().join("-")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major, `outputs` rows of `inputs` weights.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer { inputs, outputs, weights: vec![0.0; inputs * outputs], biases: vec![0.0; outputs] }
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub target: Target,
    pub config: MlpConfig,
    pub input_scaler: FeatureScaler,
    pub output_scaler: FeatureScaler,
    pub layers: Vec<Layer>,
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Per-layer activations and error signals, reused across instances.
struct Workspace {
    acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
}

impl Workspace {
    fn new(layers: &[Layer]) -> Self {
        let mut acts = vec![vec![0.0; layers[0].inputs]];
        acts.extend(layers.iter().map(|l| vec![0.0; l.outputs]));
        let deltas = layers.iter().map(|l| vec![0.0; l.outputs]).collect();
        Workspace { acts, deltas }
    }
}

impl MlpModel {
    fn initialise(target: Target, config: &MlpConfig, input_scaler: FeatureScaler, output_scaler: FeatureScaler) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut sizes = vec![input_scaler.dim()];
        sizes.extend(&config.hidden);
        sizes.push(1);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let mut layer = Layer::zeros(w[0], w[1]);
                for v in layer.weights.iter_mut().chain(layer.biases.iter_mut()) {
                    *v = rng.random_range(-0.5..=0.5);
                }
                layer
            })
            .collect();
        MlpModel { target, config: config.clone(), input_scaler, output_scaler, layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    fn forward(&self, ws: &mut Workspace) -> f64 {
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let (before, after) = ws.acts.split_at_mut(l + 1);
            let input = &before[l];
            let output = &mut after[0];
            for (o, out) in output.iter_mut().enumerate() {
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                let z = row.iter().zip(input.iter()).fold(layer.biases[o], |acc, (w, a)| acc + w * a);
                *out = if l == last { z } else { sigmoid(z) };
            }
        }
        ws.acts[last + 1][0]
    }

    /// Fills `ws.deltas` given dLoss/dOutput, using the current weights.
    fn backward(&self, ws: &mut Workspace, output_error: f64) {
        let last = self.layers.len() - 1;
        ws.deltas[last][0] = output_error;
        for l in (1..=last).rev() {
            let layer = &self.layers[l];
            let (lower, upper) = ws.deltas.split_at_mut(l);
            let below = &mut lower[l - 1];
            let delta = &upper[0];
            let acts = &ws.acts[l];
            for (i, b) in below.iter_mut().enumerate() {
                let back: f64 = (0..layer.outputs).map(|o| layer.weights[o * layer.inputs + i] * delta[o]).sum();
                *b = back * acts[i] * (1.0 - acts[i]);
            }
        }
    }

    /// Adds `scale` times the per-parameter gradient held in `ws` to `grad`,
    /// laid out like [`MlpModel::parameters`].
    fn accumulate(&self, ws: &Workspace, scale: f64, grad: &mut [f64]) {
        let mut offset = 0;
        for (l, layer) in self.layers.iter().enumerate() {
            let input = &ws.acts[l];
            for o in 0..layer.outputs {
                let d = scale * ws.deltas[l][o];
                let row = &mut grad[offset + o * layer.inputs..offset + (o + 1) * layer.inputs];
                row.iter_mut().zip(input).for_each(|(g, a)| *g += d * a);
            }
            offset += layer.weights.len();
            for o in 0..layer.outputs {
                grad[offset + o] += scale * ws.deltas[l][o];
            }
            offset += layer.outputs;
        }
    }

    /// Output in scaled space for an already-scaled input row.
    pub fn predict_scaled(&self, scaled: &[f64]) -> f64 {
        let mut ws = Workspace::new(&self.layers);
        ws.acts[0].copy_from_slice(scaled);
        self.forward(&mut ws)
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut ws = Workspace::new(&self.layers);
        self.input_scaler.scale_into(x, &mut ws.acts[0]);
        let s = self.forward(&mut ws);
        self.output_scaler.unscale(0, s)
    }

    /// Bounds on any prediction in original units. Hidden sigmoids lie in
    /// (0, 1), so the linear head cannot leave this range. Unbounded when
    /// the network has no hidden layer.
    pub fn output_bounds(&self) -> (f64, f64) {
        if self.layers.len() == 1 {
            return (f64::NEG_INFINITY, f64::INFINITY);
        }
        let head = self.layers.last().expect("at least one layer");
        let lo = head.biases[0] + head.weights.iter().map(|w| w.min(0.0)).sum::<f64>();
        let hi = head.biases[0] + head.weights.iter().map(|w| w.max(0.0)).sum::<f64>();
        let (a, b) = (self.output_scaler.unscale(0, lo), self.output_scaler.unscale(0, hi));
        (a.min(b), a.max(b))
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// All weights and biases, layer by layer (weights row-major, then biases).
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend(&layer.weights);
            out.extend(&layer.biases);
        }
        out
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<(), ModelError> {
        if params.len() != self.param_count() {
            return Err(ModelError::Contract(format!(
                "{} parameters supplied for a network with {}",
                params.len(),
                self.param_count()
            )));
        }
        let mut rest = params;
        for layer in &mut self.layers {
            let (w, tail) = rest.split_at(layer.weights.len());
            let (b, tail) = tail.split_at(layer.biases.len());
            layer.weights.copy_from_slice(w);
            layer.biases.copy_from_slice(b);
            rest = tail;
        }
        Ok(())
    }

    fn check_batch(&self, features: &FeatureMatrix, targets: &[f64]) -> Result<(), ModelError> {
        if features.rows == 0 {
            return Err(ModelError::Contract("empty batch".into()));
        }
        if features.dim != self.input_dim() || targets.len() != features.rows {
            return Err(ModelError::Contract(format!(
                "batch of {}x{} with {} targets does not fit a {}-input network",
                features.rows,
                features.dim,
                targets.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Mean squared error over a batch, in scaled space.
    pub fn scaled_loss(&self, features: &FeatureMatrix, targets: &[f64]) -> Result<f64, ModelError> {
        self.check_batch(features, targets)?;
        let mut ws = Workspace::new(&self.layers);
        let mut total = 0.0;
        for (i, &y) in targets.iter().enumerate() {
            self.input_scaler.scale_into(features.row(i), &mut ws.acts[0]);
            let e = self.forward(&mut ws) - self.output_scaler.scale(0, y);
            total += e * e;
        }
        Ok(total / features.rows as f64)
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }

    /// Structural consistency: chained shapes, one output, finite values.
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::Contract(format!("malformed network: {m}")));
        if self.layers.is_empty() {
            return bad("no layers");
        }
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.weights.len() != layer.inputs * layer.outputs || layer.biases.len() != layer.outputs {
                return bad("weight shape");
            }
            if l > 0 && layer.inputs != self.layers[l - 1].outputs {
                return bad("layer sizes do not chain");
            }
        }
        if self.layers.last().map(|l| l.outputs) != Some(1) {
            return bad("output layer must have one unit");
        }
        if self.input_scaler.dim() != self.input_dim() || self.output_scaler.dim() != 1 {
            return bad("scaler dimensions");
        }
        if !self.input_scaler.is_valid() || !self.output_scaler.is_valid() || !self.is_finite() {
            return bad("non-finite values");
        }
        Ok(())
    }
}

/// Exact gradient of the scaled-space mean squared error over a batch,
/// laid out like [`MlpModel::parameters`].
pub fn mlp_gradient(model: &MlpModel, features: &FeatureMatrix, targets: &[f64]) -> Result<Vec<f64>, ModelError> {
    model.check_batch(features, targets)?;
    let mut ws = Workspace::new(&model.layers);
    let mut grad = vec![0.0; model.param_count()];
    let scale = 2.0 / features.rows as f64;
    for (i, &y) in targets.iter().enumerate() {
        model.input_scaler.scale_into(features.row(i), &mut ws.acts[0]);
        let e = model.forward(&mut ws) - model.output_scaler.scale(0, y);
        model.backward(&mut ws, e);
        model.accumulate(&ws, scale, &mut grad);
    }
    Ok(grad)
}

/// Trains a network on a feature matrix. Scalers are learned from this data
/// only. Each epoch visits every instance once in a seeded shuffled order and
/// applies a momentum step on the half squared error of that instance.
pub fn fit_mlp_matrix(
    features: &FeatureMatrix,
    targets: &[f64],
    target: Target,
    config: &MlpConfig,
) -> Result<MlpModel, ModelError> {
    if features.rows == 0 {
        return Err(ModelError::InsufficientData { needed: 1, got: 0 });
    }
    if targets.len() != features.rows {
        return Err(ModelError::Contract(format!("{} targets for {} rows", targets.len(), features.rows)));
    }
    if config.hidden.contains(&0) {
        return Err(ModelError::Contract("hidden layer sizes must be at least 1".into()));
    }
    if features.values.iter().chain(targets).any(|v| !v.is_finite()) {
        return Err(ModelError::Contract("non-finite training values".into()));
    }
    let input_scaler = FeatureScaler::fit(features);
    let output_scaler = FeatureScaler::fit_column(targets);
    let mut model = MlpModel::initialise(target, config, input_scaler, output_scaler);

    let dim = features.dim;
    let mut scaled = vec![0.0; features.values.len()];
    for i in 0..features.rows {
        model.input_scaler.scale_into(features.row(i), &mut scaled[i * dim..(i + 1) * dim]);
    }
    let scaled_y: Vec<f64> = targets.iter().map(|&y| model.output_scaler.scale(0, y)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    // skip past the draws used for initialisation so orderings do not mirror weights
    rng.set_word_pos(1 << 20);
    let mut order: Vec<usize> = (0..features.rows).collect();
    let mut ws = Workspace::new(&model.layers);
    let mut velocity: Vec<Layer> = model.layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect();
    let (lr, mu) = (config.learning_rate, config.momentum);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut sum_sq = 0.0;
        for &i in &order {
            ws.acts[0].copy_from_slice(&scaled[i * dim..(i + 1) * dim]);
            let e = model.forward(&mut ws) - scaled_y[i];
            sum_sq += e * e;
            model.backward(&mut ws, e);
            for (l, (layer, vel)) in model.layers.iter_mut().zip(velocity.iter_mut()).enumerate() {
                let input = &ws.acts[l];
                let delta = &ws.deltas[l];
                for (o, &d) in delta.iter().enumerate().take(layer.outputs) {
                    let span = o * layer.inputs..(o + 1) * layer.inputs;
                    for ((w, v), a) in layer.weights[span.clone()].iter_mut().zip(&mut vel.weights[span]).zip(input) {
                        *v = mu * *v - lr * d * a;
                        *w += *v;
                    }
                    let vb = &mut vel.biases[o];
                    *vb = mu * *vb - lr * d;
                    layer.biases[o] += *vb;
                }
            }
        }
        if !sum_sq.is_finite() || !model.is_finite() {
            return Err(ModelError::Divergence { epoch });
        }
    }
    Ok(model)
}
