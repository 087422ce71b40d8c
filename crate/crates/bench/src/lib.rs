//! Shared fixtures for the pipeline benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use tagwave_core::carrier::BitStream;

pub fn random_bits(len: usize, seed: u64) -> BitStream {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    BitStream::random(len, &mut rng)
}
