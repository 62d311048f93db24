//! Reproducible random streams.
//!
//! Every consumer of randomness gets its own ChaCha8 stream, keyed by the
//! experiment seed and addressed by a 64-bit stream id. Per-node draws are
//! therefore independent of the order in which the scheduler visits nodes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for; occupies bits 32..40 of the stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Placement = 0,
    Direction = 1,
    Selection = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RandomStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RandomStream { seed, stream_id }
    }

    /// Stream id layout: replication in bits 40..64, purpose in 32..40,
    /// per-purpose index (node id) in 0..32.
    pub fn for_purpose(seed: u64, replication: u32, purpose: Purpose, index: u32) -> Self {
        assert!(replication < (1 << 24), "replication index exceeds 24 bits");
        let id = (u64::from(replication) << 40) | ((purpose as u64) << 32) | u64::from(index);
        RandomStream::new(seed, id)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let mut state = self.seed;
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Convenience constructor mirroring the operation name used throughout the docs.
pub fn rng_stream(seed: u64, stream_id: u64) -> ChaCha8Rng {
    RandomStream::new(seed, stream_id).rng()
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
