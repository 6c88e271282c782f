//! Deterministic per-task random streams.
//!
//! A stream is keyed by a master seed plus up to three counters, so that
//! replication `r` of cell `(i, n)` always sees the same draws no matter how
//! many other cells or methods run alongside it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Stream for `(seed, a, b, c)`; distinct keys give independent ChaCha keys.
pub fn stream(seed: u64, a: u64, b: u64, c: u64) -> Stream {
    let mut key = [0u8; 32];
    for (i, w) in [seed, a, b, c].iter().enumerate() {
        key[8 * i..8 * (i + 1)].copy_from_slice(&w.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Single-use stream for a plain seed.
pub fn seeded(seed: u64) -> Stream {
    stream(seed, 0, 0, 0)
}
