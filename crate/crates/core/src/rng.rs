//! Reproducible random streams.
//!
//! A stream is a ChaCha8 keystream selected by `(seed, stream_id)`. ChaCha is
//! counter based, so the variate sequence of a stream never depends on which
//! thread consumes it or on how many other streams exist. Monte Carlo path `i`
//! always reads stream `i`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub const fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub const fn from_seed(seed: u64) -> Self {
        Self { seed, stream_id: 0 }
    }

    /// The generator positioned at the start of this stream.
    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Child stream `index` of this stream; distinct `(self, index)` pairs map to
    /// distinct stream ids with overwhelming probability.
    pub fn substream(&self, index: u64) -> RngStream {
        RngStream {
            seed: self.seed,
            stream_id: splitmix64(self.stream_id ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d))),
        }
    }

    /// Stream `index` in the flat numbering used for per-path streams: path `i`
    /// of a run seeded with `seed` reads `RngStream::new(seed, i)`.
    pub const fn path(seed: u64, index: u64) -> RngStream {
        RngStream {
            seed,
            stream_id: index,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
