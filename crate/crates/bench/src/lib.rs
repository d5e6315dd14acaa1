//! Shared inputs for the criterion benches.

use gakit::synthetic::random_sequence;
use gakit::InterleavedSequence;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn sequence_pair(n: usize, m: usize, seed: u64) -> (InterleavedSequence, InterleavedSequence) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (
        random_sequence(&mut rng, "x", n, 64, 64),
        random_sequence(&mut rng, "y", m, 64, 64),
    )
}

pub fn random_vectors(count: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| gakit::synthetic::gaussian_vector(&mut rng, dim))
        .collect()
}
