//! Named, reproducible random substreams.
//!
//! All randomness flows from one root seed. A component asks for a stream by
//! name (`degrees/rep_3`, `directions/rep_3`, ...) and gets a generator seeded
//! with `SHA-256(root_le || name)`, so streams are independent of each other
//! and of the order in which they are requested.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// Recorded in every report so results can be regenerated.
pub const RNG_IDENTITY: &str = "ChaCha8Rng (rand_chacha 0.3); stream seed = SHA-256(root_seed_le || name)";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree {
    root: u64,
}

impl SeedTree {
    pub fn new(root: u64) -> Self {
        Self { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn stream(&self, name: &str) -> StreamRng {
        let mut hasher = Sha256::new();
        hasher.update(self.root.to_le_bytes());
        hasher.update(name.as_bytes());
        let digest: [u8; 32] = hasher.finalize().into();
        ChaCha8Rng::from_seed(digest)
    }

    /// Stream `"{name}/rep_{rep}"`.
    pub fn rep_stream(&self, name: &str, rep: usize) -> StreamRng {
        self.stream(&format!("{name}/rep_{rep}"))
    }

    /// A child seed for components that take a plain integer seed.
    pub fn child_seed(&self, name: &str) -> u64 {
        use rand::RngCore;
        self.stream(name).next_u64()
    }
}
