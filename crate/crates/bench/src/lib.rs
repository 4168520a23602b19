//! Shared input generators for the benchmarks.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic pseudo-random byte buffer.
pub fn random_bytes(len: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random()).collect()
}

/// Deterministic feature-like vectors around two cluster centers.
pub fn clustered_vectors(count: usize, dim: usize, seed: u64) -> Vec<(Vec<f64>, &'static str)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let malicious = i % 2 == 1;
            let center = if malicious { 0.8 } else { 0.2 };
            let values = (0..dim)
                .map(|_| center + rng.random_range(-0.05..0.05))
                .collect();
            (values, if malicious { "malicious" } else { "benign" })
        })
        .collect()
}
