//! Deterministic random number streams.
//!
//! Every randomized routine in this crate draws from ChaCha8 streams keyed
//! by a 64-bit seed plus a stream index (bootstrap replicate, simulation
//! run). Streams with distinct indices are statistically independent and
//! can be consumed on any number of threads in any order without changing
//! results.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout: ChaCha8, 64-bit seed, 64-bit stream id.
pub type Stream = ChaCha8Rng;

/// The stream for `(seed, index)`.
pub fn stream(seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A derived 64-bit seed for a tagged sub-experiment (SplitMix64 mix).
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    let mut z = master ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
