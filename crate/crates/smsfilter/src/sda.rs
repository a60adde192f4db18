//! Tied-weight denoising autoencoders, trained greedily layer by layer.
//!
//! A layer maps a visible vector through `y = S(W x + a)` and back through
//! `z = S(W' y + b)` where `W'` is the transpose of the same weight matrix.
//! Training corrupts the input with masking noise, reconstructs, and follows
//! the squared-error gradient; the loss target is always the clean input.
//! Scoring passes a vector up the whole stack and back down without any
//! corruption and reports the squared reconstruction error against the
//! input.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds::derive_seed;

/// Training settings for one denoising layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdaConfig {
    pub learning_rate: f64,
    /// Fraction of input units forced to zero; exactly `round(fraction·d)`
    /// distinct units per presentation.
    pub corruption: f64,
    pub epochs: usize,
    pub minibatch: usize,
    pub seed: u64,
}

impl Default for SdaConfig {
    fn default() -> Self {
        SdaConfig {
            learning_rate: 0.1,
            corruption: 0.3,
            epochs: 100,
            minibatch: 1,
            seed: 42,
        }
    }
}

impl SdaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.corruption) {
            return Err(Error::Config("corruption must be in [0, 1)".into()));
        }
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.minibatch < 1 {
            return Err(Error::Config("minibatch must be at least 1".into()));
        }
        Ok(())
    }
}

/// One autoencoder layer. `weights` is hidden × visible, row-major; decoding
/// uses the transpose of the same matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaLayer {
    visible: usize,
    hidden: usize,
    weights: Vec<f64>,
    hidden_bias: Vec<f64>,
    visible_bias: Vec<f64>,
}

impl DaLayer {
    pub fn zeros(visible: usize, hidden: usize) -> Self {
        DaLayer {
            visible,
            hidden,
            weights: vec![0.0; hidden * visible],
            hidden_bias: vec![0.0; hidden],
            visible_bias: vec![0.0; visible],
        }
    }

    /// Sigmoid-scaled uniform init: weights in ±4·sqrt(6/(fan_in+fan_out)),
    /// biases zero.
    pub fn random(visible: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init(visible, hidden, &mut rng)
    }

    fn init(visible: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 4.0 * (6.0 / (visible + hidden) as f64).sqrt();
        let weights = (0..hidden * visible)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        DaLayer {
            visible,
            hidden,
            weights,
            hidden_bias: vec![0.0; hidden],
            visible_bias: vec![0.0; visible],
        }
    }

    pub fn visible(&self) -> usize {
        self.visible
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn weight(&self, h: usize, v: usize) -> f64 {
        self.weights[h * self.visible + v]
    }

    pub fn set_weight(&mut self, h: usize, v: usize, value: f64) {
        self.weights[h * self.visible + v] = value;
    }

    pub fn hidden_bias(&self) -> &[f64] {
        &self.hidden_bias
    }

    pub fn set_hidden_bias(&mut self, h: usize, value: f64) {
        self.hidden_bias[h] = value;
    }

    pub fn visible_bias(&self) -> &[f64] {
        &self.visible_bias
    }

    pub fn set_visible_bias(&mut self, v: usize, value: f64) {
        self.visible_bias[v] = value;
    }

    /// y = S(W x + a).
    pub fn encode(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.visible, "encode input dimension mismatch");
        let mut y = Vec::with_capacity(self.hidden);
        for h in 0..self.hidden {
            let row = &self.weights[h * self.visible..(h + 1) * self.visible];
            let pre: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + self.hidden_bias[h];
            y.push(sigmoid(pre));
        }
        y
    }

    /// z = S(W' y + b).
    pub fn decode(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.hidden, "decode input dimension mismatch");
        let mut pre = self.visible_bias.clone();
        for (h, &yh) in y.iter().enumerate() {
            let row = &self.weights[h * self.visible..(h + 1) * self.visible];
            for (p, w) in pre.iter_mut().zip(row) {
                *p += w * yh;
            }
        }
        pre.into_iter().map(sigmoid).collect()
    }
}

/// Gradients of the squared reconstruction error with respect to a layer's
/// parameters, laid out like the layer itself.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients {
    pub weights: Vec<f64>,
    pub hidden_bias: Vec<f64>,
    pub visible_bias: Vec<f64>,
}

impl LayerGradients {
    fn zeros(layer: &DaLayer) -> Self {
        LayerGradients {
            weights: vec![0.0; layer.weights.len()],
            hidden_bias: vec![0.0; layer.hidden],
            visible_bias: vec![0.0; layer.visible],
        }
    }

    fn reset(&mut self) {
        self.weights.iter_mut().for_each(|g| *g = 0.0);
        self.hidden_bias.iter_mut().for_each(|g| *g = 0.0);
        self.visible_bias.iter_mut().for_each(|g| *g = 0.0);
    }
}

/// Numerically stable logistic function; never overflows for any finite x.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Masking noise: exactly `round(fraction·d)` distinct indices, chosen
/// uniformly without replacement, are set to zero.
pub fn corrupt<R: Rng>(x: &[f64], fraction: f64, rng: &mut R) -> Vec<f64> {
    let masked = ((fraction * x.len() as f64).round() as usize).min(x.len());
    let mut out = x.to_vec();
    for idx in rand::seq::index::sample(rng, x.len(), masked) {
        out[idx] = 0.0;
    }
    out
}

/// Squared reconstruction error ‖x − z‖².
pub fn loss(x: &[f64], z: &[f64]) -> f64 {
    assert_eq!(x.len(), z.len(), "loss dimension mismatch");
    x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Analytic gradients of `loss(clean, decode(encode(corrupted)))` for the
/// tied-weight layer. The weight gradient sums the encoder-path and
/// decoder-path contributions.
pub fn layer_gradients(layer: &DaLayer, corrupted: &[f64], clean: &[f64]) -> LayerGradients {
    let mut grads = LayerGradients::zeros(layer);
    accumulate_gradients(layer, corrupted, clean, &mut grads);
    grads
}

fn accumulate_gradients(
    layer: &DaLayer,
    corrupted: &[f64],
    clean: &[f64],
    grads: &mut LayerGradients,
) {
    let y = layer.encode(corrupted);
    let z = layer.decode(&y);

    // delta_z = 2(z − x) ⊙ z ⊙ (1 − z)
    let delta_z: Vec<f64> = z
        .iter()
        .zip(clean)
        .map(|(&zj, &xj)| 2.0 * (zj - xj) * zj * (1.0 - zj))
        .collect();

    // delta_y = (W·delta_z) ⊙ y ⊙ (1 − y)
    let visible = layer.visible;
    let mut delta_y = Vec::with_capacity(layer.hidden);
    for (h, &yh) in y.iter().enumerate() {
        let row = &layer.weights[h * visible..(h + 1) * visible];
        let back: f64 = row.iter().zip(&delta_z).map(|(w, d)| w * d).sum();
        delta_y.push(back * yh * (1.0 - yh));
    }

    for (h, &dy) in delta_y.iter().enumerate() {
        let grow = &mut grads.weights[h * visible..(h + 1) * visible];
        let yh = y[h];
        for ((g, &xj), &dz) in grow.iter_mut().zip(corrupted).zip(&delta_z) {
            *g += dy * xj + yh * dz;
        }
        grads.hidden_bias[h] += dy;
    }
    for (g, &dz) in grads.visible_bias.iter_mut().zip(&delta_z) {
        *g += dz;
    }
}

fn apply_gradients(layer: &mut DaLayer, grads: &LayerGradients, step: f64) {
    for (w, g) in layer.weights.iter_mut().zip(&grads.weights) {
        *w -= step * g;
    }
    for (a, g) in layer.hidden_bias.iter_mut().zip(&grads.hidden_bias) {
        *a -= step * g;
    }
    for (b, g) in layer.visible_bias.iter_mut().zip(&grads.visible_bias) {
        *b -= step * g;
    }
}

/// Train one denoising layer with plain SGD: `epochs` shuffled passes,
/// per-minibatch gradients averaged, loss always measured against the clean
/// input. Fully deterministic under `config.seed`.
pub fn train_layer(inputs: &[Vec<f64>], hidden: usize, config: &SdaConfig) -> Result<DaLayer> {
    config.validate()?;
    let visible = match inputs.first() {
        Some(first) => first.len(),
        None => return Err(Error::Config("cannot train a layer on an empty input set".into())),
    };
    if visible == 0 || hidden == 0 {
        return Err(Error::Config("layer dimensions must be nonzero".into()));
    }
    if inputs.iter().any(|x| x.len() != visible) {
        return Err(Error::Config("training inputs must share one dimension".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut layer = DaLayer::init(visible, hidden, &mut rng);
    let mut grads = LayerGradients::zeros(&layer);
    let mut order: Vec<usize> = (0..inputs.len()).collect();

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.minibatch) {
            grads.reset();
            for &idx in batch {
                let clean = &inputs[idx];
                let corrupted = corrupt(clean, config.corruption, &mut rng);
                accumulate_gradients(&layer, &corrupted, clean, &mut grads);
            }
            apply_gradients(&mut layer, &grads, config.learning_rate / batch.len() as f64);
        }
    }
    Ok(layer)
}

/// A stack of denoising layers trained greedily.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdaModel {
    sizes: Vec<usize>,
    layers: Vec<DaLayer>,
}

impl SdaModel {
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn layers(&self) -> &[DaLayer] {
        &self.layers
    }

    pub fn input_size(&self) -> usize {
        self.sizes[0]
    }

    /// Layer chain consistency: each layer's visible size must equal its
    /// predecessor's hidden size, matching the recorded sizes.
    pub fn dimensions_consistent(&self) -> bool {
        self.sizes.len() == self.layers.len() + 1
            && self
                .layers
                .iter()
                .enumerate()
                .all(|(l, layer)| layer.visible == self.sizes[l] && layer.hidden == self.sizes[l + 1])
    }

    /// Encode through every layer, decode back down in reverse order, and
    /// return the squared error against the input. No corruption is applied;
    /// this is a pure function of (model, x).
    pub fn reconstruction_error(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.input_size(), "reconstruction input dimension mismatch");
        let mut up = x.to_vec();
        let mut encodings = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            up = layer.encode(&up);
            encodings.push(up.clone());
        }
        let mut down = encodings.pop().unwrap_or_else(|| x.to_vec());
        for layer in self.layers.iter().rev() {
            down = layer.decode(&down);
        }
        loss(x, &down)
    }
}

/// Greedy layerwise training: the first layer sees the raw inputs, each
/// later layer sees the uncorrupted encodings of its trained predecessor
/// (corruption is applied locally inside each layer's own training loop).
/// The first layer trains with `config.seed` itself, so a single-layer stack
/// equals the corresponding `train_layer` call exactly.
pub fn train_stack(inputs: &[Vec<f64>], sizes: &[usize], config: &SdaConfig) -> Result<SdaModel> {
    if sizes.len() < 2 {
        return Err(Error::Config("need an input size and at least one hidden size".into()));
    }
    if inputs.first().map(Vec::len) != Some(sizes[0]) {
        return Err(Error::Config(format!(
            "stack input size {} does not match data dimension {}",
            sizes[0],
            inputs.first().map(Vec::len).unwrap_or(0)
        )));
    }

    let mut layers = Vec::with_capacity(sizes.len() - 1);
    let mut current: Vec<Vec<f64>> = inputs.to_vec();
    for (l, &hidden) in sizes[1..].iter().enumerate() {
        let mut layer_config = config.clone();
        if l > 0 {
            layer_config.seed = derive_seed(config.seed, l as u64);
        }
        let layer = train_layer(&current, hidden, &layer_config)?;
        current = current.iter().map(|x| layer.encode(x)).collect();
        layers.push(layer);
    }
    Ok(SdaModel {
        sizes: sizes.to_vec(),
        layers,
    })
}
