//! Monte-Carlo distribution of the backscatter participation number.
//!
//! Sample `i` draws from its own substream keyed by `(seed, i, attempt)`, and
//! results are gathered in index order, so the output is bit-identical for a
//! given seed whatever the thread pool looks like.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd::discrete_toggle_jacobian;
use crate::linalg::CVector;
use crate::loads::{sample_loads, ConstraintKind, LoadConstraint};
use crate::metrics::{bs_eemdof_point, participation_from_spectrum};
use crate::network::{Illumination, LoadConfiguration, ScatteringBlocks, ScatteringSystem};
use crate::rng::{Domain, Stream};

/// Fraction of singular draws above which a run is declared pathological.
pub const MAX_SINGULAR_FRACTION: f64 = 0.01;
const MAX_ATTEMPTS_PER_SAMPLE: u32 = 64;
pub const DEFAULT_BINS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum IlluminationPolicy {
    /// Fresh sphere-uniform illumination per sample.
    Rand,
    /// The same illumination for every sample.
    Fixed(Illumination),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PolicyKind {
    Rand,
    Fixed,
}

impl IlluminationPolicy {
    pub fn kind(&self) -> PolicyKind {
        match self {
            IlluminationPolicy::Rand => PolicyKind::Rand,
            IlluminationPolicy::Fixed(_) => PolicyKind::Fixed,
        }
    }
}

/// How the Jacobian of each sample is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JacobianMode {
    /// Closed form from the multiport model.
    #[default]
    Model,
    /// Toggle differencing with respect to the binary control variables,
    /// using only predicted channel matrices.
    Toggle,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DofDistribution {
    pub samples: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub seed: u64,
    pub n_samples: usize,
    pub redraw_count: usize,
    pub n_tilde: usize,
    pub constraint: ConstraintKind,
    pub policy: PolicyKind,
    pub mode: JacobianMode,
    pub system_id: String,
}

/// Haar-uniform point on the complex unit sphere in `ℂ^{n_t}`.
pub fn sample_random_illumination(n_t: usize, stream: &mut Stream) -> Illumination {
    loop {
        let v = CVector::from_fn(n_t, |_, _| stream.complex_normal());
        if let Ok(x) = Illumination::normalized(v) {
            return x;
        }
    }
}

/// FNV-1a fingerprint of the partition and matrix bits.
pub fn system_fingerprint(system: &ScatteringSystem) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |v: u64| {
        for b in v.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    for set in [system.tx_ports(), system.rx_ports(), system.bs_ports()] {
        eat(set.len() as u64);
        set.iter().for_each(|&p| eat(p as u64));
    }
    for z in system.matrix().transpose().iter() {
        eat(z.re.to_bits());
        eat(z.im.to_bits());
    }
    format!(
        "{}x{}x{}-{h:016x}",
        system.n_t(),
        system.n_r(),
        system.n_s()
    )
}

fn is_singular(e: &Error) -> bool {
    match e {
        Error::Singular { .. } => true,
        Error::Oracle { source, .. } => is_singular(source),
        _ => false,
    }
}

/// Participation number at one point, by the selected Jacobian route.
pub(crate) fn point_m(
    blocks: &ScatteringBlocks,
    r: &LoadConfiguration,
    x: &Illumination,
    constraint: &LoadConstraint,
    mode: JacobianMode,
) -> Result<f64> {
    match mode {
        JacobianMode::Model => bs_eemdof_point(blocks, r, x).map(|p| p.m),
        JacobianMode::Toggle => {
            let j = discrete_toggle_jacobian(blocks, r, x, constraint)?;
            participation_from_spectrum(&j.singular_values)
        }
    }
}

/// Distribution over random loads (and illuminations under RAND), closed-form Jacobian.
pub fn sample_distribution(
    system: &ScatteringSystem,
    policy: &IlluminationPolicy,
    constraint: &LoadConstraint,
    n_samples: usize,
    seed: u64,
) -> Result<DofDistribution> {
    sample_distribution_with_mode(
        system,
        policy,
        constraint,
        n_samples,
        seed,
        JacobianMode::Model,
    )
}

pub fn sample_distribution_with_mode(
    system: &ScatteringSystem,
    policy: &IlluminationPolicy,
    constraint: &LoadConstraint,
    n_samples: usize,
    seed: u64,
    mode: JacobianMode,
) -> Result<DofDistribution> {
    if n_samples == 0 {
        return Err(Error::Config("n_samples must be at least 1".into()));
    }
    if mode == JacobianMode::Toggle && !constraint.is_discrete() {
        return Err(Error::Unsupported(
            "toggle mode requires a PIN or PM constraint".into(),
        ));
    }
    if let IlluminationPolicy::Fixed(x) = policy {
        if x.len() != system.n_t() {
            return Err(Error::Dimension(format!(
                "fixed illumination has {} entries, system has {} transmit ports",
                x.len(),
                system.n_t()
            )));
        }
    }
    let blocks = system.blocks();
    let n_s = system.n_s();
    let n_t = system.n_t();

    let draws: Vec<Result<(f64, u32)>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            for attempt in 0..MAX_ATTEMPTS_PER_SAMPLE {
                let mut stream = Stream::with_attempt(seed, Domain::Loads, i, attempt);
                let r = sample_loads(constraint, n_s, &mut stream);
                let drawn;
                let x = match policy {
                    IlluminationPolicy::Fixed(x) => x,
                    IlluminationPolicy::Rand => {
                        drawn = sample_random_illumination(n_t, &mut stream);
                        &drawn
                    }
                };
                match point_m(&blocks, &r, x, constraint, mode) {
                    Ok(m) => return Ok((m, attempt)),
                    Err(e) if is_singular(&e) => continue,
                    Err(e) => return Err(e),
                }
            }
            Err(Error::PathologicalEnvironment {
                singular: MAX_ATTEMPTS_PER_SAMPLE as usize,
                attempts: MAX_ATTEMPTS_PER_SAMPLE as usize,
            })
        })
        .collect();

    let mut samples = Vec::with_capacity(n_samples);
    let mut redraws = 0usize;
    for d in draws {
        let (m, a) = d?;
        samples.push(m);
        redraws += a as usize;
    }
    let attempts = n_samples + redraws;
    if redraws as f64 > MAX_SINGULAR_FRACTION * attempts as f64 {
        return Err(Error::PathologicalEnvironment {
            singular: redraws,
            attempts,
        });
    }
    let (mean, std) = mean_std(&samples);
    Ok(DofDistribution {
        samples,
        mean,
        std,
        seed,
        n_samples,
        redraw_count: redraws,
        n_tilde: system.n_r().min(n_s),
        constraint: constraint.kind(),
        policy: policy.kind(),
        mode,
        system_id: system_fingerprint(system),
    })
}

/// Welford's one-pass mean and population variance.
fn mean_std(samples: &[f64]) -> (f64, f64) {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (k, &x) in samples.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (x - mean);
    }
    let n = samples.len().max(1) as f64;
    (mean, (m2 / n).max(0.0).sqrt())
}

/// `(mean, population std)`.
pub fn summarize(d: &DofDistribution) -> (f64, f64) {
    mean_std(&d.samples)
}

/// Density histogram on uniform bins over `[1, Ñ]`, returned as
/// `(bin_center, density)`. When `Ñ = 1` the range is widened to `[0.5, 1.5]`.
/// Samples a rounding error outside the range land in the edge bins.
pub fn histogram(d: &DofDistribution, n_bins: usize) -> Result<Vec<(f64, f64)>> {
    if n_bins == 0 {
        return Err(Error::Config("histogram needs at least one bin".into()));
    }
    if d.samples.is_empty() {
        return Err(Error::Degenerate(
            "histogram of an empty distribution".into(),
        ));
    }
    let (lo, hi) = if d.n_tilde > 1 {
        (1.0, d.n_tilde as f64)
    } else {
        (0.5, 1.5)
    };
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    for &m in &d.samples {
        let k = ((m - lo) / width).floor();
        let k = if k.is_nan() {
            0
        } else {
            (k.max(0.0) as usize).min(n_bins - 1)
        };
        counts[k] += 1;
    }
    let n = d.samples.len() as f64;
    Ok(counts
        .iter()
        .enumerate()
        .map(|(k, &c)| (lo + (k as f64 + 0.5) * width, c as f64 / (n * width)))
        .collect())
}
