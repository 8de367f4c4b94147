//! Dense feed-forward networks with reverse-mode gradients.
//!
//! Two architectures share this engine: a single-solution regressor that
//! maps a 7-D pose to joint angles, and a noise-conditioned generator that
//! appends a uniform noise vector to the pose input to sample multiple
//! solutions per pose. Hidden layers use GELU; the last one to three layers
//! (always including the output) use tanh, which bounds the output so the
//! denormalizer can never leave the joint limits.

pub mod matmul;
mod model_io;
mod normalizer;
mod presets;

pub use model_io::{load_model, save_model};
pub use normalizer::Normalizer;
pub use presets::{gan_preset, mlp_preset, Workspace};

use crate::rngutil::stream_rng;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Per-layer activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Gelu,
    Tanh,
    /// Pass-through; only used by tests that need a purely linear layer.
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Gelu => gelu(z),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    #[inline]
    fn grad(self, z: f64) -> f64 {
        match self {
            Activation::Gelu => gelu_grad(z),
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Identity => 1.0,
        }
    }
}

const SQRT_2_OVER_PI: f64 = 0.7978845608028654;
const GELU_CUBIC: f64 = 0.044715;

#[inline]
fn gelu_inner_tanh(x: f64) -> f64 {
    (SQRT_2_OVER_PI * (x + GELU_CUBIC * x * x * x)).tanh()
}

/// GELU, tanh approximation.
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + gelu_inner_tanh(x))
}

/// Derivative of [`gelu`] given the pre-activation and the cached inner
/// tanh value.
#[inline]
fn gelu_grad_from_tanh(x: f64, t: f64) -> f64 {
    let du = SQRT_2_OVER_PI * (1.0 + 3.0 * GELU_CUBIC * x * x);
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du
}

/// Analytic derivative of [`gelu`].
pub fn gelu_grad(x: f64) -> f64 {
    gelu_grad_from_tanh(x, gelu_inner_tanh(x))
}

/// Dense network: affine layers with per-layer activations. Weights for
/// layer `l` are stored row-major with shape `(in_dim, out_dim)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layer_sizes: Vec<usize>,
    activations: Vec<Activation>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Cached forward-pass state for one backward pass. Consumed by value:
/// the type system enforces single use.
pub struct GradientTape {
    batch: usize,
    /// Network input, then each layer's post-activation output.
    inputs: Vec<Vec<f64>>,
    /// Pre-activations per layer.
    pre_acts: Vec<Vec<f64>>,
    /// Inner tanh values of GELU layers, cached so the backward pass does
    /// not re-evaluate them.
    gelu_t: Vec<Vec<f64>>,
}

/// Parameter and input gradients from one backward pass.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub d_weights: Vec<Vec<f64>>,
    pub d_biases: Vec<Vec<f64>>,
    pub d_input: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Gradients {
            d_weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            d_biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            d_input: Vec::new(),
        }
    }

    /// Accumulate `other` scaled by `s`.
    pub fn add_scaled(&mut self, other: &Gradients, s: f64) {
        for (a, b) in self.d_weights.iter_mut().zip(&other.d_weights) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += s * y;
            }
        }
        for (a, b) in self.d_biases.iter_mut().zip(&other.d_biases) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += s * y;
            }
        }
    }

    /// Global L2 norm over all parameter gradients.
    pub fn global_norm(&self) -> f64 {
        let mut sum = 0.0;
        for w in &self.d_weights {
            for v in w {
                sum += v * v;
            }
        }
        for b in &self.d_biases {
            for v in b {
                sum += v * v;
            }
        }
        sum.sqrt()
    }

    /// Scale so the global norm does not exceed `max_norm`. Returns the
    /// pre-clip norm.
    pub fn clip_global_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.global_norm();
        if norm > max_norm && norm > 0.0 {
            let s = max_norm / norm;
            for w in &mut self.d_weights {
                for v in w.iter_mut() {
                    *v *= s;
                }
            }
            for b in &mut self.d_biases {
                for v in b.iter_mut() {
                    *v *= s;
                }
            }
        }
        norm
    }

    pub fn is_finite(&self) -> bool {
        self.d_weights.iter().flatten().all(|v| v.is_finite())
            && self.d_biases.iter().flatten().all(|v| v.is_finite())
    }
}

impl DenseNet {
    /// Zero-initialized network. `activations` must name one activation per
    /// affine layer.
    pub fn new(layer_sizes: Vec<usize>, activations: Vec<Activation>) -> Self {
        assert!(layer_sizes.len() >= 2, "need at least input and output sizes");
        assert!(layer_sizes.iter().all(|&s| s > 0), "layer sizes must be positive");
        assert_eq!(
            activations.len(),
            layer_sizes.len() - 1,
            "one activation per affine layer"
        );
        let weights = (0..layer_sizes.len() - 1)
            .map(|l| vec![0.0; layer_sizes[l] * layer_sizes[l + 1]])
            .collect();
        let biases = (0..layer_sizes.len() - 1)
            .map(|l| vec![0.0; layer_sizes[l + 1]])
            .collect();
        DenseNet { layer_sizes, activations, weights, biases }
    }

    /// GELU hidden stack with a tanh tail of `tanh_layers` (clamped to the
    /// layer count), the layout both presets use.
    pub fn with_tanh_tail(layer_sizes: Vec<usize>, tanh_layers: usize) -> Self {
        let n = layer_sizes.len() - 1;
        let tanh_layers = tanh_layers.clamp(1, n.min(3));
        let activations = (0..n)
            .map(|l| if l >= n - tanh_layers { Activation::Tanh } else { Activation::Gelu })
            .collect();
        DenseNet::new(layer_sizes, activations)
    }

    /// Uniform Xavier/Glorot init in +-sqrt(6/(fan_in+fan_out)).
    pub fn init_uniform(&mut self, seed: u64) {
        let mut rng = stream_rng(seed, 0x1217);
        for l in 0..self.weights.len() {
            let bound = (6.0 / (self.layer_sizes[l] + self.layer_sizes[l + 1]) as f64).sqrt();
            for w in self.weights[l].iter_mut() {
                *w = rng.random_range(-bound..bound);
            }
            for b in self.biases[l].iter_mut() {
                *b = 0.0;
            }
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn num_layers(&self) -> usize {
        self.activations.len()
    }

    pub fn num_params(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }

    fn check_input(&self, inputs: &[f64]) -> usize {
        let dim = self.input_dim();
        assert!(
            !inputs.is_empty() && inputs.len() % dim == 0,
            "input length {} is not a multiple of the input width {}",
            inputs.len(),
            dim
        );
        inputs.len() / dim
    }

    /// Forward pass over a flat row-major batch. Returns the output batch
    /// and the tape needed for one backward pass.
    pub fn forward(&self, inputs: &[f64]) -> (Vec<f64>, GradientTape) {
        let batch = self.check_input(inputs);
        let mut tape = GradientTape {
            batch,
            inputs: Vec::with_capacity(self.num_layers() + 1),
            pre_acts: Vec::with_capacity(self.num_layers()),
            gelu_t: Vec::with_capacity(self.num_layers()),
        };
        tape.inputs.push(inputs.to_vec());

        for l in 0..self.num_layers() {
            let (k, m) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let cur = tape.inputs.last().expect("seeded with the input");
            let mut z = vec![0.0; batch * m];
            matmul::forward_affine(cur, &self.weights[l], &self.biases[l], batch, k, m, &mut z);
            let act = self.activations[l];
            let mut y = vec![0.0; batch * m];
            let mut cache = Vec::new();
            match act {
                Activation::Gelu => {
                    cache.reserve_exact(z.len());
                    for (yi, &zi) in y.iter_mut().zip(&z) {
                        let t = gelu_inner_tanh(zi);
                        cache.push(t);
                        *yi = 0.5 * zi * (1.0 + t);
                    }
                }
                _ => {
                    for (yi, &zi) in y.iter_mut().zip(&z) {
                        *yi = act.apply(zi);
                    }
                }
            }
            tape.pre_acts.push(z);
            tape.gelu_t.push(cache);
            tape.inputs.push(y);
        }
        let out = tape.inputs.last().expect("at least one layer").clone();
        (out, tape)
    }

    /// Inference without tape bookkeeping.
    pub fn infer(&self, inputs: &[f64]) -> Vec<f64> {
        let batch = self.check_input(inputs);
        let mut cur = inputs.to_vec();
        for l in 0..self.num_layers() {
            let (k, m) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let mut z = vec![0.0; batch * m];
            matmul::forward_affine(&cur, &self.weights[l], &self.biases[l], batch, k, m, &mut z);
            let act = self.activations[l];
            for zi in z.iter_mut() {
                *zi = act.apply(*zi);
            }
            cur = z;
        }
        cur
    }

    /// Reverse-mode pass. `output_grad` is the loss gradient at the network
    /// output, flat `(batch, output_dim)`. The tape is consumed.
    pub fn backward(&self, tape: GradientTape, output_grad: &[f64]) -> Gradients {
        let batch = tape.batch;
        assert_eq!(
            output_grad.len(),
            batch * self.output_dim(),
            "output_grad shape mismatch"
        );

        let mut grads = Gradients::zeros_like(self);
        let mut d_cur = output_grad.to_vec();

        for l in (0..self.num_layers()).rev() {
            let (k, m) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let act = self.activations[l];
            let z = &tape.pre_acts[l];
            // dL/dz = dL/dy * act'(z); tanh reuses the stored output,
            // GELU the cached inner tanh.
            match act {
                Activation::Gelu => {
                    let cache = &tape.gelu_t[l];
                    for i in 0..d_cur.len() {
                        d_cur[i] *= gelu_grad_from_tanh(z[i], cache[i]);
                    }
                }
                Activation::Tanh => {
                    let y = &tape.inputs[l + 1];
                    for (g, &yi) in d_cur.iter_mut().zip(y) {
                        *g *= 1.0 - yi * yi;
                    }
                }
                Activation::Identity => {}
            }
            let x = &tape.inputs[l];
            matmul::grad_weights(x, &d_cur, batch, k, m, &mut grads.d_weights[l]);
            matmul::grad_bias(&d_cur, batch, m, &mut grads.d_biases[l]);

            let mut d_prev = vec![0.0; batch * k];
            matmul::grad_input(&d_cur, &self.weights[l], batch, k, m, &mut d_prev);
            d_cur = d_prev;
        }
        grads.d_input = d_cur;
        grads
    }
}

/// Whether this network is the single-solution regressor or the
/// noise-conditioned generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Mlp,
    Gan,
}

/// A trained (or freshly initialized) model plus everything needed to run
/// it against a chain: the normalizer and, for generators, the noise width.
#[derive(Debug, Clone)]
pub struct NeuralModel {
    pub net: DenseNet,
    pub normalizer: Normalizer,
    pub kind: ModelKind,
    /// Noise vector width; zero for the plain regressor.
    pub noise_dim: usize,
    /// Digest of the chain this model was trained for.
    pub chain_hash: String,
    /// Seed the parameters were initialized (and trained) with.
    pub rng_seed: u64,
}

impl NeuralModel {
    pub fn dof(&self) -> usize {
        self.net.output_dim()
    }

    /// Joint angles for a batch of poses. For generators, `noise` must hold
    /// `batch * noise_dim` values in [-1, 1]; pass an empty slice for the
    /// regressor.
    pub fn solve_batch(&self, poses: &[crate::chain::Pose], noise: &[f64]) -> Vec<Vec<f64>> {
        let batch = poses.len();
        let in_dim = self.net.input_dim();
        assert_eq!(noise.len(), batch * self.noise_dim, "noise shape mismatch");
        let mut inputs = vec![0.0; batch * in_dim];
        for (r, pose) in poses.iter().enumerate() {
            let norm = self.normalizer.normalize_pose(pose);
            inputs[r * in_dim..r * in_dim + 7].copy_from_slice(&norm);
            if self.noise_dim > 0 {
                inputs[r * in_dim + 7..(r + 1) * in_dim]
                    .copy_from_slice(&noise[r * self.noise_dim..(r + 1) * self.noise_dim]);
            }
        }
        let out = self.net.infer(&inputs);
        let dof = self.dof();
        (0..batch)
            .map(|r| self.normalizer.denormalize_joints(&out[r * dof..(r + 1) * dof]))
            .collect()
    }
}
