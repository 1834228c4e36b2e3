//! Counter-based seed derivation.
//!
//! Every random stream used by a campaign is keyed by a tuple of integers
//! (master seed, stream domain, and up to two counters). The tuple is folded
//! through the SplitMix64 finalizer and the result seeds a ChaCha8 generator.
//! A stream therefore depends only on its key, never on the order in which
//! workers happen to request streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random source used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// Independent stream domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Channel = 1,
    PhaseInit = 2,
    Data = 3,
}

#[inline]
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn derive_seed(master: u64, stream: Stream, a: u64, b: u64) -> u64 {
    let mut x = splitmix64(master);
    for word in [stream as u64, a, b] {
        x = splitmix64(x ^ splitmix64(word));
    }
    x
}

pub fn stream_rng(master: u64, stream: Stream, a: u64, b: u64) -> SimRng {
    SimRng::seed_from_u64(derive_seed(master, stream, a, b))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
