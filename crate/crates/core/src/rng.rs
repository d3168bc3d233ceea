//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a [`Stream`] addressed by
//! `(seed, domain, index)`. The stream is a ChaCha20 keystream whose key
//! holds the seed and domain tag and whose stream id is the index, so
//! substreams never overlap and their content depends only on the address,
//! not on the order in which they are created or which thread uses them.

use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::f64::consts::TAU;

/// Domain tags separating independent uses of the same seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Domain {
    Environment = 1,
    Loads = 2,
    Illumination = 3,
    LoadSet = 4,
    Starts = 5,
    Redraw = 6,
    Test = 99,
}

pub struct Stream {
    rng: ChaCha20Rng,
    spare_normal: Option<f64>,
}

impl Stream {
    pub fn new(seed: u64, domain: Domain, index: u64) -> Self {
        Self::with_attempt(seed, domain, index, 0)
    }

    /// Stream for the `attempt`-th re-draw of the same logical sample.
    pub fn with_attempt(seed: u64, domain: Domain, index: u64, attempt: u32) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
        key[16..20].copy_from_slice(&attempt.to_le_bytes());
        let mut rng = ChaCha20Rng::from_seed(key);
        rng.set_stream(index);
        Self {
            rng,
            spare_normal: None,
        }
    }

    /// Uniform on [0, 1) with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on (0, 1]; safe as a logarithm argument.
    fn uniform_open0(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn coin(&mut self) -> bool {
        self.rng.next_u64() >> 63 == 1
    }

    /// Standard normal via the Box–Muller transform.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform_open0();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        self.spare_normal = Some(radius * s);
        radius * c
    }

    /// Circularly-symmetric complex normal with unit variance `E|z|^2 = 1`.
    pub fn complex_normal(&mut self) -> Complex64 {
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        let re = self.normal();
        let im = self.normal();
        Complex64::new(re * scale, im * scale)
    }
}

/// Derive an unrelated seed from `seed` (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
