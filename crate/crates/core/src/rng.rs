//! Seeded random streams.
//!
//! Every random vector in the crate is drawn from a ChaCha8 generator whose
//! key is derived from the user seed and whose 64-bit stream id encodes a
//! purpose tag (top 8 bits) and a trial index (low 56 bits). Two draws with
//! the same seed but different purposes or trials never share a keystream, and
//! trial `i` sees the same numbers no matter which thread runs it or in what
//! order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Which quantity a stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Purpose {
    Congestion = 1,
    Control = 2,
}

const INDEX_BITS: u32 = 56;
const INDEX_MASK: u64 = (1 << INDEX_BITS) - 1;

/// Generator for `(seed, purpose, index)`.
pub fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    assert!(index <= INDEX_MASK, "stream index {index} exceeds 56 bits");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << INDEX_BITS) | index);
    rng
}

/// Derives an independent child seed, used to give every point of a sweep its
/// own family of streams.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finaliser over the pair
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
