//! Random number streams.
//!
//! Every chain draws from a ChaCha8 generator keyed by the run seed, with
//! the chain index selecting the stream (`set_stream`). Streams for distinct
//! chain indices never overlap, so chains can run in any order or in
//! parallel and still reproduce the same samples.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ChainRng = ChaCha8Rng;

/// Generator for chain `chain` of a run seeded with `seed`.
pub fn chain_rng(seed: u64, chain: u64) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain);
    rng
}
