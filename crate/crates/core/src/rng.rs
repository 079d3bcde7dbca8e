//! Seeded random sources.
//!
//! ChaCha8 is used everywhere because its output stream is fixed by
//! specification, independent of platform and crate version.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}
