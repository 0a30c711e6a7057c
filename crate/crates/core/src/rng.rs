//! Deterministic random streams.
//!
//! Every stochastic step draws from a ChaCha8 stream derived from a master
//! seed and a list of integer tags (generation, model index, ...). Work can
//! therefore be scheduled in any order, or in parallel, without changing
//! the output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SegenRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `seed` with `tags` into a single 64-bit seed.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(seed), |acc, &t| splitmix64(acc ^ splitmix64(t.wrapping_add(0x5851_F42D_4C95_7F2D))))
}

/// An independent stream for `(seed, tags...)`.
pub fn substream(seed: u64, tags: &[u64]) -> SegenRng {
    SegenRng::seed_from_u64(derive_seed(seed, tags))
}

pub fn from_seed(seed: u64) -> SegenRng {
    SegenRng::seed_from_u64(seed)
}
