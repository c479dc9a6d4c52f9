//! Counter-based random streams.
//!
//! Every consumer of randomness (a column's potential pool, a device's
//! switching events, an encoder block's weights) owns its own stream keyed by
//! `(seed, stream_id)`. Draw sequences therefore never depend on evaluation
//! order or on how work is split across threads.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Namespaces for stream ids so that unrelated consumers never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Domain {
    Potential = 1,
    Permanence = 2,
    SpLearning = 3,
    TmSegments = 4,
    TmLearning = 5,
    DeviceProgram = 6,
    DeviceRead = 7,
    EncoderWeights = 8,
    EncoderNoise = 9,
    Template = 10,
    Dataset = 11,
    Calibration = 12,
    Test = 13,
}

/// A reproducible random stream identified by `(seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    /// Stream for a domain and a tuple of indices (column, step, ...).
    pub fn keyed(seed: u64, domain: Domain, key: &[u64]) -> Self {
        Self::new(seed, stream_id(domain, key))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        if p >= 1.0 {
            // keep the stream position independent of p
            let _ = self.uniform();
            true
        } else {
            self.uniform() < p
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

impl RngCore for RngStream {
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

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a domain and key tuple into a 64-bit stream id.
pub fn stream_id(domain: Domain, key: &[u64]) -> u64 {
    let mut h = splitmix(domain as u64);
    for &k in key {
        h = splitmix(h ^ k);
    }
    h
}
