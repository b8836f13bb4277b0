//! Seeded randomness.
//!
//! Generator: ChaCha12 (`rand_chacha`), seeded from a 64-bit value through
//! `SeedableRng::seed_from_u64`. Independent substreams use ChaCha's native
//! 64-bit stream id, so a component's draws never depend on how many draws
//! another component made.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

/// Named substreams for the components of one experiment cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Data = 1,
    Init = 2,
    GateNoise = 3,
    Sampler = 4,
    RiskMc = 5,
    Shuffle = 6,
}

#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: ChaCha12Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { seed, inner: ChaCha12Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// A fresh generator on the same seed but a different ChaCha stream.
    pub fn substream(&self, stream: Stream) -> Rng {
        self.substream_id(stream as u64)
    }

    pub fn substream_id(&self, id: u64) -> Rng {
        let mut inner = ChaCha12Rng::seed_from_u64(self.seed);
        inner.set_stream(id);
        Rng { seed: self.seed, inner }
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn normal(&mut self, mean: f64, std: f64) -> f64 {
        mean + std * self.standard_normal()
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.inner.random::<f64>()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.random()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        use rand::seq::SliceRandom;
        items.shuffle(&mut self.inner);
    }
}

/// `n` i.i.d. standard normal draws; `n = 0` yields an empty vector.
pub fn sample_standard_normal(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.standard_normal()).collect()
}

/// Deterministic 64-bit mixing of a seed with a tag (FNV-1a over the tag,
/// then a SplitMix64 finalizer). Used to derive per-cell seeds.
pub fn derive_seed(master: u64, tag: &str, index: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix64(splitmix64(master ^ h) ^ index)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
