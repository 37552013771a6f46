//! Seeded random streams.
//!
//! Every unit of parallel work (a bootstrap replicate, a Monte Carlo trial)
//! draws from its own ChaCha stream selected by `(seed, index)`, so results
//! do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Independent generator for work item `index` under master `seed`.
pub fn substream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
