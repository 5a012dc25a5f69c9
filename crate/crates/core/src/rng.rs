//! Seed derivation. Every random stream in the pipeline is a ChaCha8 stream
//! seeded from a hash of the master seed and a path of indices, so results
//! never depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix a seed with a sequence of stream identifiers.
pub fn derive(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn stream(seed: u64, path: &[u64]) -> Rng {
    Rng::seed_from_u64(derive(seed, path))
}

/// Stable tags for named streams.
pub mod tag {
    pub const PROFILE: u64 = 0x5052_4f46;
    pub const ENV: u64 = 0x454e_56;
    pub const NOISE: u64 = 0x4e4f_4953;
    pub const AWGN: u64 = 0x4157_474e;
    pub const PATCH: u64 = 0x5041_5443;
    pub const STYLE: u64 = 0x5354_594c;
    pub const SPLIT: u64 = 0x5350_4c54;
    pub const TRAIN: u64 = 0x5452_4e;
    pub const IMAGE: u64 = 0x494d_47;
    pub const SUBJECT: u64 = 0x5355_424a;
}
