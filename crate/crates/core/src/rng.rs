//! Counter-based child streams for reproducible Monte-Carlo drops.
//!
//! Every random draw in a campaign comes from a ChaCha8 generator keyed by
//! `(master_seed, drop_index, ue_index)` plus a [`StreamKind`] selecting the
//! ChaCha stream. Work units therefore never share generator state and the
//! results are independent of scheduling order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Purpose of a random stream within one drop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StreamKind {
    Layout,
    Measurement,
    Ambiguity,
}

impl StreamKind {
    fn id(self) -> u64 {
        match self {
            StreamKind::Layout => 1,
            StreamKind::Measurement => 2,
            StreamKind::Ambiguity => 3,
        }
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the 64-bit child seed for a `(master, drop, ue)` triple.
pub fn child_seed(master_seed: u64, drop_index: u64, ue_index: u64) -> u64 {
    mix(mix(mix(master_seed) ^ drop_index) ^ ue_index)
}

/// Generator for one work unit.
pub fn stream(master_seed: u64, drop_index: u64, ue_index: u64, kind: StreamKind) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(child_seed(master_seed, drop_index, ue_index));
    rng.set_stream(kind.id());
    rng
}

/// Generator seeded directly from a single seed, for standalone use.
pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}
