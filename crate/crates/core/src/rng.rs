//! Counter-based deterministic random substreams.
//!
//! Every random quantity in the crate is drawn from a substream keyed by a
//! root seed plus a tuple of counters (entry coordinates, replicate index,
//! pair index, ...). Substreams are mutually independent for distinct keys,
//! so results never depend on thread scheduling or evaluation order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain-separation tags for the different consumers of randomness.
pub mod tag {
    pub const ROW_LATENT: u64 = 0x01;
    pub const COL_LATENT: u64 = 0x02;
    pub const ENTRY: u64 = 0x03;
    pub const MC_EXPECTATION: u64 = 0x04;
    pub const ORACLE_OUTER: u64 = 0x05;
    pub const ORACLE_INNER: u64 = 0x06;
    pub const PAIR_SAMPLER: u64 = 0x07;
    pub const REPLICATE: u64 = 0x08;
    pub const KERNEL_SCALE: u64 = 0x09;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Collapse a seed and a counter key into a single well-mixed 64-bit value.
#[inline]
pub fn mix(seed: u64, key: &[u64]) -> u64 {
    let mut acc = splitmix64(seed ^ 0x6a09_e667_f3bc_c909);
    for &part in key {
        acc = splitmix64(acc ^ splitmix64(part));
    }
    acc
}

/// Independent substream for `(seed, key)`.
#[inline]
pub fn substream(seed: u64, key: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, key))
}
