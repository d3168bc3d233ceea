//! Effective run configurations. Each command echoes its record into the
//! output directory as `config.json`; `bsdof run` replays one.

use bsdof::io::{from_pair, to_pair};
use bsdof::{Direction, EnvironmentSpec, Illumination, JacobianMode, LoadConstraint};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    SynthEnv(SynthEnvConfig),
    Benchmark(BenchmarkConfig),
    BsDist(BsDistConfig),
    OptimizeX(OptimizeConfig),
    ValidateJacobian(ValidateConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthEnvConfig {
    pub environment: EnvironmentSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub tx_ports: Vec<usize>,
    pub rx_ports: Vec<usize>,
    pub bs_ports: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub system: String,
    #[serde(default)]
    pub partition: Option<Partition>,
}

/// `policy` is `"RAND"` or a fixed unit-norm illumination given inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "UPPERCASE")]
pub enum PolicyConfig {
    Rand,
    Fixed { x: Vec<[f64; 2]> },
}

impl PolicyConfig {
    pub fn fixed(x: &Illumination) -> Self {
        PolicyConfig::Fixed {
            x: x.as_vector().iter().map(|&z| to_pair(z)).collect(),
        }
    }

    pub fn to_policy(&self) -> anyhow::Result<bsdof::IlluminationPolicy> {
        Ok(match self {
            PolicyConfig::Rand => bsdof::IlluminationPolicy::Rand,
            PolicyConfig::Fixed { x } => {
                let v = bsdof::CVector::from_iterator(x.len(), x.iter().map(|&p| from_pair(p)));
                bsdof::IlluminationPolicy::Fixed(Illumination::new(v)?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BsDistConfig {
    pub system: String,
    pub constraint: LoadConstraint,
    pub policy: PolicyConfig,
    pub n_samples: usize,
    pub seed: u64,
    pub mode: JacobianMode,
    pub n_bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeConfig {
    pub system: String,
    pub constraint: LoadConstraint,
    pub direction: Direction,
    pub n_objective_samples: usize,
    pub n_starts: usize,
    pub max_iterations: usize,
    pub x_tolerance: f64,
    pub f_tolerance: f64,
    pub seed: u64,
    pub redraw_load_set: bool,
    /// Seed of the reported distribution at the optimum, distinct from `seed`.
    pub final_seed: u64,
    pub final_samples: usize,
    pub n_bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateConfig {
    /// Validate a given system; otherwise a random sweep is generated.
    #[serde(default)]
    pub system: Option<String>,
    pub instances: usize,
    pub seed: u64,
    pub step: f64,
}
