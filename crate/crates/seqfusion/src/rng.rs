//! Seed derivation for named random sub-streams.
//!
//! Every source of randomness in the crate draws from a `ChaCha8Rng` obtained
//! through [`stream_rng`], so one global seed fans out into independent,
//! reproducible streams (split, hmm, lstm, rf, synth, ...). Changing the seed
//! path of one component does not perturb any other.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a 64-bit seed for sub-stream `name`/`index` of `base`.
pub fn derive_seed(base: u64, name: &str, index: u64) -> u64 {
    let mut h = splitmix64(base);
    for &b in name.as_bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    splitmix64(h ^ index)
}

/// RNG for sub-stream `name`/`index` of `base`.
pub fn stream_rng(base: u64, name: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, name, index))
}
