//! Seeded, splittable random streams.
//!
//! Every stream is identified by a run seed plus a `(cell, replication,
//! imputation)` triple. The ChaCha key is derived from all four numbers, so
//! the draws a worker sees depend only on which unit of work it is doing and
//! never on scheduling order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Position of a stream inside an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct StreamId {
    pub cell: u64,
    pub replication: u64,
    pub imputation: u64,
}

impl StreamId {
    pub const fn new(cell: u64, replication: u64, imputation: u64) -> Self {
        Self {
            cell,
            replication,
            imputation,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    id: StreamId,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, id: StreamId) -> Self {
        let mut state = seed ^ 0x5851_f42d_4c95_7f2d;
        let mut key = [0u8; 32];
        let words = [
            splitmix64(&mut state),
            splitmix64(&mut state) ^ id.cell,
            splitmix64(&mut state) ^ id.replication,
            splitmix64(&mut state) ^ id.imputation,
        ];
        // A second mixing round so that nearby ids give unrelated keys.
        let mut mix = words.iter().fold(0u64, |acc, w| acc.rotate_left(23) ^ w);
        for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
            mix ^= w;
            chunk.copy_from_slice(&splitmix64(&mut mix).to_le_bytes());
        }
        Self {
            seed,
            id,
            rng: ChaCha8Rng::from_seed(key),
        }
    }

    /// Convenience for tests and one-off draws: cell, replication and
    /// imputation all zero.
    pub fn from_seed(seed: u64) -> Self {
        Self::new(seed, StreamId::default())
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn id(&self) -> StreamId {
        self.id
    }

    /// Fresh stream for another imputation of the same cell and replication.
    pub fn for_imputation(&self, imputation: u64) -> Self {
        Self::new(
            self.seed,
            StreamId {
                imputation,
                ..self.id
            },
        )
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn open01(&mut self) -> f64 {
        loop {
            // 53 random bits, offset by half an ulp so 0 never occurs.
            let bits = self.rng.next_u64() >> 11;
            let u = (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
            if u < 1.0 {
                return u;
            }
        }
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable 64-bit hash used to turn structured keys into stream cells.
pub(crate) fn hash_words(words: &[u64]) -> u64 {
    let mut state = 0x243f_6a88_85a3_08d3u64;
    let mut out = 0;
    for &w in words {
        state ^= w;
        out = splitmix64(&mut state);
    }
    out
}
