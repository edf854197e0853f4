//! Deterministic random streams.
//!
//! Every consumer draws from ChaCha8 seeded with the user seed and a
//! purpose-specific stream id, so adding draws in one place never shifts
//! the numbers seen elsewhere.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    InstanceGeneration = 1,
    FunctionSelection = 2,
    WarmStart = 3,
    InteriorSampling = 4,
}

pub fn stream(seed: u64, purpose: Stream) -> ChaCha8Rng {
    stream_indexed(seed, purpose, 0)
}

/// Stream for `purpose` further split by `index` (restart number, node id, ...).
pub fn stream_indexed(seed: u64, purpose: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((purpose as u64) << 48 | (index & 0xffff_ffff_ffff));
    rng
}
