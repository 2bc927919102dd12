//! Sub-seed derivation.
//!
//! Every random stream is seeded from `(root seed, component name, index)`:
//! the component name is hashed with 64-bit FNV-1a, xored with the root
//! seed, then mixed with the index through two SplitMix64 rounds. Streams
//! are ChaCha8, whose output is stable across platforms and crate versions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn fnv1a(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, component: &str, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ fnv1a(component)) ^ index)
}

pub fn stream(seed: u64, component: &str, index: u64) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, component, index))
}
