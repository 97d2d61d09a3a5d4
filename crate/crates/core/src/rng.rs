//! Counter-based seed splitting.
//!
//! Every replicate draws from ChaCha8 keyed by `(master_seed, lane)` with the
//! replicate index as the stream id, so a replicate's randomness depends only on
//! those three numbers and never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random streams used within one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lane {
    Offspring = 0,
    Displacement = 1,
    Selection = 2,
    Auxiliary = 3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSplitter {
    master: u64,
}

impl SeedSplitter {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn stream(&self, replicate: u64, lane: Lane) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master.to_le_bytes());
        key[8..16].copy_from_slice(&(lane as u64).to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(replicate);
        rng
    }
}
