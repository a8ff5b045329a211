//! Counter-based sub-seed derivation.
//!
//! Every random stream in the crate is a [`ChaCha8Rng`] keyed by
//! `derive(master, domain, index)`, so any unit of work can be regenerated in
//! isolation and parallel generation matches serial generation exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub mod domain {
    pub const DAG: u64 = 1;
    pub const CASCADE: u64 = 2;
    pub const INIT: u64 = 3;
    pub const SUBSAMPLE: u64 = 4;
    pub const SWEEP: u64 = 5;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(master: u64, domain: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(domain)) ^ index)
}

pub fn rng(master: u64, domain: u64, index: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(derive(master, domain, index))
}
