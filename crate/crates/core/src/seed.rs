//! Counter-based seed derivation.
//!
//! A stream is identified by a master seed plus a path of integers
//! (trial index, sample index, ...). The path is hashed together with the
//! master seed, so a stream never depends on which thread asks for it or in
//! what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Path roots, so streams for different purposes never collide.
pub mod tags {
    pub const COMPLEXITY_SAMPLE: u64 = 1;
    pub const BENCHMARK_TRIAL: u64 = 2;
    pub const CLI_SIMULATE: u64 = 3;
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master: u64,
    pub path: Vec<u64>,
}

impl SeedSpec {
    pub fn new(master: u64, path: impl Into<Vec<u64>>) -> Self {
        SeedSpec {
            master,
            path: path.into(),
        }
    }

    pub fn root(master: u64) -> Self {
        SeedSpec::new(master, Vec::new())
    }

    /// Extends the path by one component.
    pub fn child(&self, k: u64) -> Self {
        let mut path = self.path.clone();
        path.push(k);
        SeedSpec {
            master: self.master,
            path,
        }
    }

    fn digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"hawkes-mdl/seed/v1");
        h.update(self.master.to_le_bytes());
        h.update((self.path.len() as u64).to_le_bytes());
        for &k in &self.path {
            h.update(k.to_le_bytes());
        }
        h.finalize().into()
    }

    /// 64-bit summary of the derived stream, used for reporting.
    pub fn derived(&self) -> u64 {
        let d = self.digest();
        u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.digest())
    }
}
