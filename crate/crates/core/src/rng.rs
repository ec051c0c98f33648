//! Counter-based randomness.
//!
//! Every random decision is keyed by a tuple of integers (circuit seed,
//! layer, site, purpose tag, ...). The key is hashed into a 64-bit seed for a
//! ChaCha stream, so a value never depends on how many other values were
//! drawn before it or on which worker drew them.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Purpose tags mixed into keys so that streams for different roles never
/// collide.
pub mod tag {
    pub const GATE: u64 = 0x6761_7465; // "gate"
    pub const MEAS: u64 = 0x6d65_6173; // "meas"
    pub const SCRAMBLE: u64 = 0x7363_726d; // "scrm"
    pub const TRAJECTORY: u64 = 0x7472_616a; // "traj"
    pub const CIRCUIT: u64 = 0x6369_7263; // "circ"
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash an ordered key into 64 bits. Stable across platforms and releases.
pub fn hash_key(parts: &[u64]) -> u64 {
    let mut h = 0x243f_6a88_85a3_08d3u64;
    for &p in parts {
        h = splitmix64(h ^ splitmix64(p));
    }
    h
}

/// Uniform in `[0, 1)` from a key, with 53 bits of resolution.
pub fn unit_from_key(parts: &[u64]) -> f64 {
    (hash_key(parts) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// A ChaCha stream seeded from a hashed key.
pub fn stream(parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(hash_key(parts))
}

/// Bit source for measurement outcomes: exactly one bit is consumed per
/// call to [`BitStream::next_bit`].
#[derive(Debug, Clone)]
pub struct BitStream {
    rng: ChaCha8Rng,
    buf: u64,
    left: u32,
}

impl BitStream {
    pub fn new(rng: ChaCha8Rng) -> Self {
        BitStream { rng, buf: 0, left: 0 }
    }

    pub fn from_key(parts: &[u64]) -> Self {
        Self::new(stream(parts))
    }

    pub fn next_bit(&mut self) -> bool {
        if self.left == 0 {
            self.buf = self.rng.next_u64();
            self.left = 64;
        }
        let b = self.buf & 1 == 1;
        self.buf >>= 1;
        self.left -= 1;
        b
    }
}
