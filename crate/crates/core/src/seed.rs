//! Counter-based stream splitting.
//!
//! Every random stream in a run is addressed by a path of integer indices
//! below a 64-bit master seed (for example `realization 3 / step 17 /
//! candidate 42`). The stream for a path is a pure function of the master seed
//! and the path, so the order in which workers pick up tasks never changes
//! results.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

/// The generator type handed out for every stream.
pub type StreamRng = ChaCha20Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A node in the tree of random streams below a master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedTree {
    master: u64,
    path: u64,
}

impl SeedTree {
    pub fn new(master: u64) -> Self {
        Self { master, path: 0 }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Hash of the index path leading to this node; used as the ChaCha stream id.
    pub fn stream_id(&self) -> u64 {
        self.path
    }

    pub fn child(&self, index: u64) -> Self {
        Self {
            master: self.master,
            path: splitmix64(self.path ^ splitmix64(index.wrapping_add(0x632b_e59b_d9b4_e019))),
        }
    }

    /// Convenience for a multi-level path, `tree.descend(&[a, b])` ==
    /// `tree.child(a).child(b)`.
    pub fn descend(&self, indices: &[u64]) -> Self {
        indices.iter().fold(*self, |node, &i| node.child(i))
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.master);
        rng.set_stream(self.path);
        rng
    }
}
