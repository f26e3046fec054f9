//! Seeded random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Generator family recorded in reports.
pub const RNG_FAMILY: &str = "ChaCha8Rng (rand_chacha 0.9)";

pub type Rng = ChaCha8Rng;

/// A 64-bit seed plus a stream id. Equal pairs give equal sample sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed {
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Seed {
    pub fn new(seed: u64) -> Self {
        Seed { seed, stream: 0 }
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        Seed { seed, stream }
    }

    pub fn rng(&self) -> Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        r
    }

    /// Stream for sub-task `tag`, e.g. a replica index.
    pub fn child(&self, tag: u64) -> Seed {
        Seed { seed: self.seed, stream: splitmix(self.stream ^ splitmix(tag.wrapping_add(1))) }
    }
}

impl From<u64> for Seed {
    fn from(seed: u64) -> Self {
        Seed::new(seed)
    }
}
