//! A tiny anchor-free temporal detector: a stack of dilated 1-D
//! convolutions over feature sequences, with a per-timestep head emitting
//! class logits (background included) and two boundary offsets.
//!
//! Forward and backward passes are hand-rolled in f64 and single-threaded;
//! training runs are bit-reproducible given the seed.

use alloc::vec::Vec;

// Float resolves f64 math in no_std builds; when a workspace build links
// std, the inherent methods win and this import goes quiet.
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::FeatureSequence;

/// Detector hyperparameters. Dilation doubles per hidden layer, so the
/// receptive field grows as `1 + (kernel-1) * (2^layers - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyModelConfig {
    /// Hidden conv layers.
    pub layers: usize,
    /// Hidden channel width.
    pub channels: usize,
    /// Odd kernel size.
    pub kernel: usize,
    /// Action classes; the head adds one background class.
    pub classes: usize,
    /// Input feature dimension.
    pub input_dim: usize,
    /// Greedy per-class NMS threshold at decode time.
    pub nms_tiou: f64,
    /// Minimum class probability for emitting a prediction.
    pub score_threshold: f64,
    /// Weight initialization seed.
    pub seed: u64,
}

impl ToyModelConfig {
    pub fn new(input_dim: usize, classes: usize, seed: u64) -> Self {
        Self {
            layers: 6,
            channels: 24,
            kernel: 3,
            classes,
            input_dim,
            nms_tiou: 0.5,
            score_threshold: 0.3,
            seed,
        }
    }

    /// Head channels: `classes` action logits, one background logit, two
    /// boundary offsets.
    pub fn head_dim(&self) -> usize {
        self.classes + 3
    }

    /// Index of the background logit.
    pub fn background(&self) -> usize {
        self.classes
    }
}

/// One 1-D convolution with zero padding and the given dilation.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    pub in_dim: usize,
    pub out_dim: usize,
    pub kernel: usize,
    pub dilation: usize,
    /// Row-major `[out][tap][in]`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Conv1d {
    fn init(in_dim: usize, out_dim: usize, kernel: usize, dilation: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = (6.0 / ((in_dim + out_dim) * kernel) as f64).sqrt();
        let weights = (0..out_dim * in_dim * kernel).map(|_| rng.gen_range(-bound..bound)).collect();
        Self { in_dim, out_dim, kernel, dilation, weights, bias: alloc::vec![0.0; out_dim] }
    }

    /// `input` is `t x in_dim`; returns `t x out_dim`.
    fn forward(&self, input: &[f64], timesteps: usize) -> Vec<f64> {
        let half = (self.kernel / 2) as isize;
        let mut out = alloc::vec![0.0; timesteps * self.out_dim];
        for t in 0..timesteps {
            let out_row = &mut out[t * self.out_dim..(t + 1) * self.out_dim];
            out_row.copy_from_slice(&self.bias);
            for j in 0..self.kernel {
                let src = t as isize + (j as isize - half) * self.dilation as isize;
                if src < 0 || src >= timesteps as isize {
                    continue;
                }
                let in_row = &input[src as usize * self.in_dim..(src as usize + 1) * self.in_dim];
                for (o, out_v) in out_row.iter_mut().enumerate() {
                    let w_base = (o * self.kernel + j) * self.in_dim;
                    let taps = &self.weights[w_base..w_base + self.in_dim];
                    let mut acc = 0.0;
                    for (w, x) in taps.iter().zip(in_row) {
                        acc += w * x;
                    }
                    *out_v += acc;
                }
            }
        }
        out
    }

    /// Accumulates weight/bias gradients and returns the input gradient.
    fn backward(
        &self,
        input: &[f64],
        timesteps: usize,
        d_out: &[f64],
        grads: &mut ConvGrads,
    ) -> Vec<f64> {
        let half = (self.kernel / 2) as isize;
        let mut d_input = alloc::vec![0.0; timesteps * self.in_dim];
        for t in 0..timesteps {
            let d_row = &d_out[t * self.out_dim..(t + 1) * self.out_dim];
            for (o, &g) in d_row.iter().enumerate() {
                grads.bias[o] += g;
            }
            for j in 0..self.kernel {
                let src = t as isize + (j as isize - half) * self.dilation as isize;
                if src < 0 || src >= timesteps as isize {
                    continue;
                }
                let src = src as usize;
                let in_row = &input[src * self.in_dim..(src + 1) * self.in_dim];
                let d_in_row = &mut d_input[src * self.in_dim..(src + 1) * self.in_dim];
                for (o, &g) in d_row.iter().enumerate() {
                    if g == 0.0 {
                        continue;
                    }
                    let w_base = (o * self.kernel + j) * self.in_dim;
                    let taps = &self.weights[w_base..w_base + self.in_dim];
                    let g_taps = &mut grads.weights[w_base..w_base + self.in_dim];
                    for i in 0..self.in_dim {
                        g_taps[i] += g * in_row[i];
                        d_in_row[i] += g * taps[i];
                    }
                }
            }
        }
        d_input
    }
}

/// Gradient buffer for one conv layer.
#[derive(Debug, Clone)]
pub struct ConvGrads {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Gradient buffers mirroring the model parameters.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<ConvGrads>,
}

impl Gradients {
    pub fn scale(&mut self, factor: f64) {
        for layer in &mut self.layers {
            for w in &mut layer.weights {
                *w *= factor;
            }
            for b in &mut layer.bias {
                *b *= factor;
            }
        }
    }

    pub fn zero(&mut self) {
        for layer in &mut self.layers {
            layer.weights.fill(0.0);
            layer.bias.fill(0.0);
        }
    }
}

/// Cached activations from one forward pass.
pub struct ForwardPass {
    /// `inputs[l]` is the input to layer `l` (post-ReLU of the previous
    /// layer; `inputs[0]` is the raw feature sequence).
    inputs: Vec<Vec<f64>>,
    /// Raw head outputs, `t x head_dim`.
    pub outputs: Vec<f64>,
    pub timesteps: usize,
}

impl ForwardPass {
    pub fn output_row(&self, t: usize) -> &[f64] {
        let d = self.outputs.len() / self.timesteps;
        &self.outputs[t * d..(t + 1) * d]
    }
}

/// The detector: hidden dilated convs with ReLU, then a 1x1 head conv.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    pub config: ToyModelConfig,
    pub layers: Vec<Conv1d>,
}

impl ToyModel {
    /// Deterministic initialization from `config.seed`.
    pub fn init(config: ToyModelConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut layers = Vec::with_capacity(config.layers + 1);
        let mut in_dim = config.input_dim;
        for l in 0..config.layers {
            let dilation = 1usize << l.min(16);
            layers.push(Conv1d::init(in_dim, config.channels, config.kernel, dilation, &mut rng));
            in_dim = config.channels;
        }
        layers.push(Conv1d::init(in_dim, config.head_dim(), 1, 1, &mut rng));
        Self { config, layers }
    }

    pub fn zero_grads(&self) -> Gradients {
        Gradients {
            layers: self
                .layers
                .iter()
                .map(|l| ConvGrads {
                    weights: alloc::vec![0.0; l.weights.len()],
                    bias: alloc::vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn forward(&self, features: &FeatureSequence) -> ForwardPass {
        assert_eq!(features.dim(), self.config.input_dim, "feature dim mismatch");
        let timesteps = features.timesteps();
        let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        inputs.push(features.values().to_vec());
        let mut current = inputs[0].clone();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut out = layer.forward(&current, timesteps);
            let is_head = l + 1 == self.layers.len();
            if !is_head {
                for v in &mut out {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
                inputs.push(out.clone());
            }
            current = out;
        }
        ForwardPass { inputs, outputs: current, timesteps }
    }

    /// Backpropagates `d_outputs` (gradient on raw head outputs) through the
    /// cached pass, accumulating into `grads`.
    pub fn backward(&self, pass: &ForwardPass, d_outputs: &[f64], grads: &mut Gradients) {
        debug_assert_eq!(d_outputs.len(), pass.outputs.len());
        let mut d_current = d_outputs.to_vec();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let input = &pass.inputs[l];
            let mut d_input = layer.backward(input, pass.timesteps, &d_current, &mut grads.layers[l]);
            if l > 0 {
                // ReLU preceded this layer's input
                for (d, &a) in d_input.iter_mut().zip(input.iter()) {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            d_current = d_input;
        }
    }

    /// Flat parameter view, layer by layer (weights then bias), for
    /// serialization and bit-equality checks.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    /// Loads parameters from a flat view with the layout of
    /// [`Self::flat_params`].
    pub fn load_flat_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.param_count(), "parameter count mismatch");
        let mut at = 0usize;
        for l in &mut self.layers {
            let (wn, bn) = (l.weights.len(), l.bias.len());
            l.weights.copy_from_slice(&params[at..at + wn]);
            at += wn;
            l.bias.copy_from_slice(&params[at..at + bn]);
            at += bn;
        }
    }
}

/// Numerically safe softplus and its derivative (the logistic sigmoid).
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

pub fn softplus_grad(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// In-place softmax over a logit slice, numerically stabilized.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
