//! Seed derivation for reproducible parallel runs.
//!
//! Every random stream in the crate (fold partitions, bootstrap multipliers,
//! simulated data) is a ChaCha8 generator seeded from a parent seed, a stream
//! tag and an index. Workers never share a generator, so the order in which
//! variables or replicates are processed cannot change any result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags. Distinct tags keep, e.g., the fold partition of variable 3
/// independent of the bootstrap multipliers of variable 3.
pub mod stream {
    pub const FOLDS: u64 = 0x464f_4c44;
    pub const BOOTSTRAP: u64 = 0x424f_4f54;
    pub const REPLICATE: u64 = 0x5245_504c;
    pub const DESIGN: u64 = 0x4445_5349;
    pub const NOISE: u64 = 0x4e4f_4953;
    pub const NETWORK: u64 = 0x4e45_5457;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for `(seed, stream, index)`.
///
/// The parent seed is xored with a mixed `(stream, index)` word and mixed
/// again, so nearby seeds and nearby indices give unrelated children.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.rotate_left(32) ^ index))
}

pub fn rng_for(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream, index))
}
