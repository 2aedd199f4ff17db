//! Reproducible, splittable random streams.
//!
//! Every stream is a ChaCha8 generator keyed by `seed` and positioned on the
//! ChaCha stream `stream_id`. Two streams with the same pair produce identical
//! output; different `stream_id`s select disjoint keystreams.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Identifies a stream for provenance records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamId {
    pub seed: u64,
    pub stream_id: u64,
}

/// A counter-based random stream owned by one logical task.
#[derive(Debug, Clone)]
pub struct RngStream {
    id: StreamId,
    inner: ChaCha8Rng,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            id: StreamId { seed, stream_id },
            inner,
        }
    }

    pub fn id(&self) -> StreamId {
        self.id
    }

    /// Derives an independent child stream. The child depends only on this
    /// stream's identity and `index`, never on how much of it was consumed.
    pub fn substream(&self, index: u64) -> RngStream {
        let seed = splitmix(self.id.seed ^ splitmix(self.id.stream_id.wrapping_add(1)));
        RngStream::new(seed, splitmix(index ^ 0x5bd1_e995))
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for x in out.iter_mut() {
            *x = self.inner.sample(StandardNormal);
        }
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Uniform integer in `lo..=hi`.
    pub fn range_inclusive(&mut self, lo: u64, hi: u64) -> u64 {
        self.inner.gen_range(lo..=hi)
    }

    pub fn coin(&mut self) -> bool {
        self.inner.gen::<bool>()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}
