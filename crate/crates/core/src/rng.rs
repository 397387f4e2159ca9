//! Seed plumbing for reproducible, order-independent replicate streams.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator for a single simulation seed.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed of replicate `index` under `master`.
///
/// The ChaCha stream id is the replicate counter, so replicate seeds depend
/// only on `(master, index)` and never on scheduling order.
pub fn replicate_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}
