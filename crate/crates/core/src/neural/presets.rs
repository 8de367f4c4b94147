//! Fixed network layouts for the two workspace presets.
//!
//! The full-scale layer widths and tanh-tail depths come from the tuned
//! reference configurations; `width_factor` scales them down for desk-scale
//! runs (default 0.1 elsewhere in the crate), with an 8-neuron floor.

use super::DenseNet;
use serde::{Deserialize, Serialize};

/// Which workspace preset a model targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Workspace {
    Small,
    Full,
}

const MLP_SMALL: [usize; 8] = [3380, 2250, 3240, 2270, 1840, 30, 60, 220];
const MLP_FULL: [usize; 8] = [2200, 2400, 2400, 1900, 250, 220, 30, 380];
const GAN_SMALL: [usize; 8] = [790, 990, 3120, 1630, 300, 1660, 730, 540];
const GAN_FULL: [usize; 8] = [1180, 1170, 2500, 1290, 700, 970, 440, 770];

const MLP_TANH_LAYERS: usize = 3;
const GAN_SMALL_TANH_LAYERS: usize = 3;
const GAN_FULL_TANH_LAYERS: usize = 2;

pub const GAN_SMALL_NOISE_DIM: usize = 8;
pub const GAN_FULL_NOISE_DIM: usize = 10;

fn scale(widths: &[usize; 8], factor: f64) -> Vec<usize> {
    widths
        .iter()
        .map(|&w| ((w as f64 * factor).round() as usize).max(8))
        .collect()
}

/// Single-solution regressor layout: 7-D pose in, `dof` out.
/// `width_factor` 1.0 reproduces the reference widths.
pub fn mlp_preset(workspace: Workspace, dof: usize, width_factor: f64) -> DenseNet {
    let hidden = match workspace {
        Workspace::Small => scale(&MLP_SMALL, width_factor),
        Workspace::Full => scale(&MLP_FULL, width_factor),
    };
    let mut sizes = vec![7];
    sizes.extend(hidden);
    sizes.push(dof);
    DenseNet::with_tanh_tail(sizes, MLP_TANH_LAYERS)
}

/// Noise-conditioned generator layout: 7-D pose plus the noise vector in,
/// `dof` out. Returns the network and its noise width.
pub fn gan_preset(workspace: Workspace, dof: usize, width_factor: f64) -> (DenseNet, usize) {
    let (hidden, noise_dim, tanh_layers) = match workspace {
        Workspace::Small => (scale(&GAN_SMALL, width_factor), GAN_SMALL_NOISE_DIM, GAN_SMALL_TANH_LAYERS),
        Workspace::Full => (scale(&GAN_FULL, width_factor), GAN_FULL_NOISE_DIM, GAN_FULL_TANH_LAYERS),
    };
    let mut sizes = vec![7 + noise_dim];
    sizes.extend(hidden);
    sizes.push(dof);
    (DenseNet::with_tanh_tail(sizes, tanh_layers), noise_dim)
}
