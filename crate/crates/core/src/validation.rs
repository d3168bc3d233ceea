//! Randomized sweep checking the closed-form Jacobian against the
//! finite-difference oracle.

use serde::{Deserialize, Serialize};

use crate::environment::{synth_environment, EnvironmentSpec};
use crate::error::{Error, Result};
use crate::fd::complex_step_jacobian;
use crate::linalg::{rel_frobenius, spectral_norm};
use crate::loads::{sample_loads, LoadConstraint};
use crate::metrics::column_space_residual;
use crate::network::{b_factor, closed_form_jacobian, ScatteringSystem};
use crate::rng::{derive_seed, Domain, Stream};
use crate::sampler::sample_random_illumination;

/// Scattering strengths cycled through by generated instances.
pub const SWEEP_STRENGTHS: [f64; 3] = [0.3, 0.6, 0.9];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceCheck {
    pub n_t: usize,
    pub n_r: usize,
    pub n_s: usize,
    pub spectral_norm: f64,
    pub rel_error_fd: f64,
    pub column_space_residual: f64,
    pub factorization_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub instances: usize,
    pub seed: u64,
    pub step: f64,
    pub max_rel_error_fd: f64,
    pub max_column_space_residual: f64,
    pub max_factorization_error: f64,
    pub checks: Vec<InstanceCheck>,
}

/// Instance `k` of the sweep: `N_T, N_R ∈ 1..=4`, `N_S ∈ 1..=16`, strength
/// `SWEEP_STRENGTHS[k % 3]`, full coupling, plus UNI loads and a random
/// illumination drawn from the same stream.
pub fn sweep_instance(seed: u64, k: usize) -> Result<(ScatteringSystem, Stream)> {
    let mut stream = Stream::new(seed, Domain::Test, k as u64);
    let n_t = 1 + (stream.uniform() * 4.0) as usize;
    let n_r = 1 + (stream.uniform() * 4.0) as usize;
    let n_s = 1 + (stream.uniform() * 16.0) as usize;
    let eta = SWEEP_STRENGTHS[k % SWEEP_STRENGTHS.len()];
    let sys = synth_environment(&EnvironmentSpec::new(
        n_t,
        n_r,
        n_s,
        eta,
        1.0,
        derive_seed(seed, k as u64),
    ))?;
    Ok((sys, stream))
}

/// Runs `instances` checks. With `fixed` set every instance reuses that
/// system and only the loads and illumination vary.
pub fn validate_jacobians(
    fixed: Option<&ScatteringSystem>,
    instances: usize,
    seed: u64,
    step: f64,
) -> Result<ValidationReport> {
    if instances == 0 {
        return Err(Error::Config("need at least one instance".into()));
    }
    let mut checks = Vec::with_capacity(instances);
    for k in 0..instances {
        let (sys, mut stream) = match fixed {
            Some(s) => (s.clone(), Stream::new(seed, Domain::Test, k as u64)),
            None => sweep_instance(seed, k)?,
        };
        let blocks = sys.blocks();
        let r = sample_loads(&LoadConstraint::uni(), sys.n_s(), &mut stream);
        let x = sample_random_illumination(sys.n_t(), &mut stream);
        let closed = closed_form_jacobian(&blocks, &r, &x)?;
        let fd = complex_step_jacobian(&blocks, &r, &x, step)?;
        let b = b_factor(&blocks, &r, &x)?;
        checks.push(InstanceCheck {
            n_t: sys.n_t(),
            n_r: sys.n_r(),
            n_s: sys.n_s(),
            spectral_norm: spectral_norm(sys.matrix()),
            rel_error_fd: rel_frobenius(&fd.j, &closed.j),
            column_space_residual: column_space_residual(&closed, &blocks.s_rs)?,
            factorization_error: rel_frobenius(&(&blocks.s_rs * b), &closed.j),
        });
    }
    let max = |f: fn(&InstanceCheck) -> f64| checks.iter().map(f).fold(0.0, f64::max);
    Ok(ValidationReport {
        instances,
        seed,
        step,
        max_rel_error_fd: max(|c| c.rel_error_fd),
        max_column_space_residual: max(|c| c.column_space_residual),
        max_factorization_error: max(|c| c.factorization_error),
        checks,
    })
}
