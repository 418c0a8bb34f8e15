//! Named, seed-derived random streams.
//!
//! Every consumer of randomness (bootstrap, forest, perceptron init,
//! simulations) draws from `substream(seed, name, index)`, so a component can
//! be re-run alone and still see the numbers it saw inside a full pipeline,
//! and parallel workers get the same stream regardless of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn fnv1a(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

pub fn substream(seed: u64, name: &str, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(name));
    rng.set_stream(index);
    rng
}
