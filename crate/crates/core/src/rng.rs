//! Seeded random sources.
//!
//! Every sampling routine takes an explicit generator. Parallel work derives
//! one ChaCha stream per task from a master seed, so results are reproducible
//! regardless of how tasks are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type GwRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> GwRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `index` under the master `seed`.
pub fn stream(seed: u64, index: u64) -> GwRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
