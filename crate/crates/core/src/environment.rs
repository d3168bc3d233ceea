//! Synthetic passive radio environments.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, CMatrix};
use crate::network::ScatteringSystem;
use crate::rng::{Domain, Stream};

pub const DEFAULT_REFERENCE_IMPEDANCE: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSpec {
    pub n_t: usize,
    pub n_r: usize,
    pub n_s: usize,
    /// Target spectral norm `η ∈ [0, 1)`.
    pub scattering_strength: f64,
    /// Multiplier on the `S_SS` block, in `[0, 1]`.
    pub mc_strength: f64,
    #[serde(default)]
    pub reciprocal: bool,
    pub seed: u64,
}

impl EnvironmentSpec {
    pub fn new(
        n_t: usize,
        n_r: usize,
        n_s: usize,
        scattering_strength: f64,
        mc_strength: f64,
        seed: u64,
    ) -> Self {
        Self {
            n_t,
            n_r,
            n_s,
            scattering_strength,
            mc_strength,
            reciprocal: false,
            seed,
        }
    }

    pub fn n_total(&self) -> usize {
        self.n_t + self.n_r + self.n_s
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_t == 0 || self.n_r == 0 || self.n_s == 0 {
            return Err(Error::Config("port counts must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.scattering_strength) {
            return Err(Error::Config(format!(
                "scattering strength must lie in [0, 1), got {}",
                self.scattering_strength
            )));
        }
        if !(0.0..=1.0).contains(&self.mc_strength) {
            return Err(Error::Config(format!(
                "mutual-coupling strength must lie in [0, 1], got {}",
                self.mc_strength
            )));
        }
        Ok(())
    }

    /// Ports `0..n_t` transmit, the next `n_r` receive, the rest backscatter.
    pub fn partition(&self) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        let t = (0..self.n_t).collect();
        let r = (self.n_t..self.n_t + self.n_r).collect();
        let s = (self.n_t + self.n_r..self.n_total()).collect();
        (t, r, s)
    }
}

fn scale_to(m: &mut CMatrix, target: f64) {
    let norm = spectral_norm(m);
    if norm > 0.0 {
        *m *= Complex64::new(target / norm, 0.0);
    }
}

/// Gaussian environment scaled to spectral norm `η`, with the
/// backscatter-to-backscatter block damped by `mc_strength`.
pub fn synth_environment(spec: &EnvironmentSpec) -> Result<ScatteringSystem> {
    spec.validate()?;
    let n = spec.n_total();
    let mut stream = Stream::new(spec.seed, Domain::Environment, 0);
    // Row-major draw order keeps the matrix independent of storage layout.
    let mut entries = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        entries.push(stream.complex_normal());
    }
    let mut s = CMatrix::from_row_slice(n, n, &entries);
    if spec.reciprocal {
        s = (&s + s.transpose()) * Complex64::new(0.5, 0.0);
    }
    let eta = spec.scattering_strength;
    scale_to(&mut s, eta);

    let (t, r, b) = spec.partition();
    if spec.mc_strength != 1.0 {
        let mc = Complex64::new(spec.mc_strength, 0.0);
        for &i in &b {
            for &j in &b {
                s[(i, j)] *= mc;
            }
        }
        if spectral_norm(&s) > eta {
            scale_to(&mut s, eta);
        }
    }
    ScatteringSystem::new(s, t, r, b, DEFAULT_REFERENCE_IMPEDANCE)
}

/// Copy of `system` with its `S_SS` block set to zero.
pub fn zero_mc(system: &ScatteringSystem) -> Result<ScatteringSystem> {
    let mut s = system.matrix().clone();
    for &i in system.bs_ports() {
        for &j in system.bs_ports() {
            s[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    system.with_matrix(s)
}

/// One environment per strength, sharing the base seed. `mc_strength` scales
/// with the strength relative to `base.scattering_strength` (capped at 1).
pub fn environment_ladder(
    base: &EnvironmentSpec,
    strengths: &[f64],
) -> Result<Vec<ScatteringSystem>> {
    base.validate()?;
    if strengths.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Config(
            "ladder strengths must be nonincreasing".into(),
        ));
    }
    strengths
        .iter()
        .map(|&eta| {
            let mc = if base.scattering_strength > 0.0 {
                (base.mc_strength * eta / base.scattering_strength).min(1.0)
            } else {
                base.mc_strength
            };
            synth_environment(&EnvironmentSpec {
                scattering_strength: eta,
                mc_strength: mc,
                ..base.clone()
            })
        })
        .collect()
}
