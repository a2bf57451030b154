//! Derived random streams.
//!
//! Every consumer of randomness gets its own ChaCha stream keyed by
//! (master seed, domain, index). Streams are independent by construction:
//! the three values are packed into distinct words of the 256-bit seed, so no
//! draw in one stream can shift another stream's sequence. That is what makes
//! runs byte-identical and lets e.g. traffic stay fixed while the MAC differs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Per-node arrival processes and destination draws.
pub const TRAFFIC: u64 = 1;
/// Per-node MAC decisions: channel choice and backoff draws.
pub const MAC: u64 = 2;
/// Per-epoch arbitration entropy.
pub const PHY: u64 = 3;
/// Spatial hotspot weight shape.
pub const WEIGHTS: u64 = 4;
/// Per-point seeds inside a sweep.
pub const SWEEP: u64 = 5;
/// Per-receiver erroneous-decode draws (keyed by epoch entropy).
pub const DECODE: u64 = 6;
/// Per-job seeds in a protocol comparison.
pub const COMPARE: u64 = 7;

pub fn stream(master: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[0..8].copy_from_slice(&master.to_le_bytes());
    seed[8..16].copy_from_slice(&domain.to_le_bytes());
    seed[16..24].copy_from_slice(&index.to_le_bytes());
    ChaCha8Rng::from_seed(seed)
}

/// A single u64 drawn from the derived stream; used to seed child runs.
pub fn derive_seed(master: u64, domain: u64, index: u64) -> u64 {
    stream(master, domain, index).random()
}
