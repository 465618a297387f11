//! Reproducible random streams.
//!
//! Generator: ChaCha8 (counter-based). The 256-bit key is expanded from the
//! 64-bit master seed with `SeedableRng::seed_from_u64`, and replica `i`
//! uses ChaCha stream id `i`. Streams for different replicas never overlap,
//! and any replica can be regenerated from `(seed, i)` alone, independent of
//! thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct StreamRng(ChaCha8Rng);

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        StreamRng(rng)
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        self.0.random::<f64>()
    }

    /// Exponential with the given rate, by inversion of `1 - U`.
    pub fn exponential(&mut self, rate: f64) -> f64 {
        -(1.0 - self.uniform()).ln() / rate
    }
}
