use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RngError {
    #[error("exponential rate must be positive and finite, got {0}")]
    BadRate(f64),
}

/// Kind of draw for [`RngStream::draw`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Draw {
    Uniform,
    Exponential(f64),
}

/// A reproducible random stream identified by `(seed, stream_id)`.
///
/// Each stochastic source in a scenario gets its own stream so that
/// changing one knob does not shift the draws of another.
pub struct RngStream {
    rng: ChaCha12Rng,
    draws: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: &str) -> Self {
        let key = splitmix64(seed ^ fnv1a(stream_id.as_bytes()));
        RngStream { rng: ChaCha12Rng::seed_from_u64(key), draws: 0 }
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.draws += 1;
        self.rng.random::<f64>()
    }

    /// Exponential with rate `rate` (mean `1/rate`).
    pub fn exponential(&mut self, rate: f64) -> Result<f64, RngError> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(RngError::BadRate(rate));
        }
        let exp = Exp::new(rate).map_err(|_| RngError::BadRate(rate))?;
        self.draws += 1;
        Ok(exp.sample(&mut self.rng))
    }

    pub fn draw(&mut self, kind: Draw) -> Result<f64, RngError> {
        match kind {
            Draw::Uniform => Ok(self.uniform()),
            Draw::Exponential(rate) => self.exponential(rate),
        }
    }

    /// Uniform index in `0..n`. `n` must be nonzero.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0);
        self.draws += 1;
        self.rng.random_range(0..n)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
