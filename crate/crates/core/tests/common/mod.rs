//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use cartograf::features::{FeaturizedExample, SCALAR_DIM};
use cartograf::model::ModelConfig;
use cartograf::rng::SplitMix64;

/// Model small enough for exhaustive finite differences.
pub fn tiny_config() -> ModelConfig {
    ModelConfig {
        conv_channels: vec![2; 5],
        kernel_size: 3,
        fc_dims: vec![4, 3, 2],
        dropout_rate: 0.3,
        max_len: 4,
        input_dim: 3,
        scalar_dim: SCALAR_DIM,
    }
}

pub fn random_example(
    id: usize,
    max_len: usize,
    dim: usize,
    rng: &mut SplitMix64,
) -> FeaturizedExample {
    let mut scalars = [0.0; SCALAR_DIM];
    for s in &mut scalars {
        *s = rng.next_f64();
    }
    FeaturizedExample {
        id: format!("e{id:07}"),
        max_len,
        dim,
        matrix: (0..max_len * dim).map(|_| rng.normal()).collect(),
        scalars,
        gold: rng.below(2),
    }
}

pub fn random_batch(n: usize, config: &ModelConfig, seed: u64) -> Vec<FeaturizedExample> {
    let mut rng = SplitMix64::new(seed);
    (0..n)
        .map(|i| random_example(i, config.max_len, config.input_dim, &mut rng))
        .collect()
}
