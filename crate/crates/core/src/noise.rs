//! Reproducible Gaussian white-noise streams.
//!
//! A stream is a ChaCha8 generator keyed by `(master seed, mode index)` and
//! positioned on ChaCha stream number `substream`. The 256-bit key is four
//! little-endian words `w_i = splitmix64(seed + i·φ) ^ splitmix64(mode + i·φ)`
//! for i = 1..=4 (φ = 0x9E3779B97F4A7C15), with the mode term omitted for
//! mode 0. Unit Gaussians come from the ziggurat sampler in `rand_distr`.
//! Draw sequences depend only on `(seed, mode, substream)`, never on which
//! thread consumes the stream or in what order streams are created.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_key(seed: u64, mode: u64) -> [u8; 32] {
    let mut key = [0u8; 32];
    for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
        let offset = (i as u64 + 1).wrapping_mul(GOLDEN);
        let mut word = splitmix64(seed.wrapping_add(offset));
        if mode != 0 {
            word ^= splitmix64(mode.wrapping_add(offset));
        }
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    key
}

/// White-noise source ξ_k with ⟨ξ(t)ξ(t′)⟩ = 2Γ_k·δ(t − t′).
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
    gamma: f64,
    substream: u64,
}

impl NoiseStream {
    pub fn new(seed: u64, substream: u64, gamma: f64) -> Self {
        Self::for_mode(seed, 0, substream, gamma)
    }

    /// Stream for trajectory `substream` of mode number `mode` in an ensemble.
    pub fn for_mode(seed: u64, mode: u64, substream: u64, gamma: f64) -> Self {
        let mut rng = ChaCha8Rng::from_seed(stream_key(seed, mode));
        rng.set_stream(substream);
        Self {
            rng,
            gamma,
            substream,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn substream(&self) -> u64 {
        self.substream
    }

    /// Unit Gaussian draw; advances the stream.
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// One step-averaged noise value with mean 0 and variance 2Γ/dt.
    ///
    /// Always consumes exactly one Gaussian so that streams stay aligned
    /// whatever Γ is; returns exactly 0.0 when Γ = 0.
    pub fn draw_noise_increment(&mut self, dt: f64) -> f64 {
        let n = self.standard_normal();
        if self.gamma == 0.0 {
            0.0
        } else {
            (2.0 * self.gamma / dt).sqrt() * n
        }
    }
}
