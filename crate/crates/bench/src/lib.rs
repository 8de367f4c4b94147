//! Shared fixtures for the criterion benches.

use ngik_core::dataset::WorkspaceBounds;
use ngik_core::neural::{ModelKind, NeuralModel, Normalizer};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn random_configs(chain: &ngik_core::KinematicChain, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            chain
                .joints()
                .iter()
                .map(|j| rng.random_range(j.lower..=j.upper))
                .collect()
        })
        .collect()
}

/// Untrained desk-preset regressor for the 8-DoF arm; latency benches do
/// not care about solution quality.
pub fn desk_mlp_model() -> (ngik_core::KinematicChain, NeuralModel) {
    let chain = ngik_core::sample_chains::arm8();
    let bounds = WorkspaceBounds::new([0.2, -0.9, 0.8], [0.85, 0.0, 1.4]).unwrap();
    let mut net = ngik_core::neural::mlp_preset(ngik_core::neural::Workspace::Small, chain.dof(), 0.1);
    net.init_uniform(17);
    let model = NeuralModel {
        net,
        normalizer: Normalizer::new(&bounds, &chain),
        kind: ModelKind::Mlp,
        noise_dim: 0,
        chain_hash: chain.digest(),
        rng_seed: 17,
    };
    (chain, model)
}
