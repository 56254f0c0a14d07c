//! Seeded random streams.
//!
//! Every random consumer in a simulation (each user, each channel) owns an
//! independent ChaCha stream derived from one base seed, so a run is a pure
//! function of its seed regardless of event interleaving.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Independent stream `stream` of the generator keyed by `seed`.
pub fn stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed for replication `index` of an experiment with base seed `base`.
pub fn replication_seed(base: u64, index: u64) -> u64 {
    base.wrapping_mul(1_000_000).wrapping_add(index)
}
