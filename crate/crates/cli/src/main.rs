//! `bsdof`: backscatter MIMO degree-of-freedom experiments.

#[cfg(test)]
mod cli_tests;
mod commands;
mod config;

use anyhow::{bail, Context, Result};
use bsdof::io::illumination_from_json;
use bsdof::rng::derive_seed;
use bsdof::{ConstraintKind, Direction, EnvironmentSpec, JacobianMode, LoadConstraint};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

use config::*;

#[derive(Parser)]
#[command(
    name = "bsdof",
    version,
    about = "Effective degrees of freedom of backscatter MIMO systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic passive scattering system.
    SynthEnv(SynthEnvArgs),
    /// Conventional EEMDOF benchmark: participation number of S_RS.
    Benchmark(BenchmarkArgs),
    /// Monte-Carlo distribution of the BS-EEMDOF.
    BsDist(BsDistArgs),
    /// Optimize the illumination for maximal or minimal mean BS-EEMDOF.
    OptimizeX(OptimizeArgs),
    /// Cross-check the closed-form Jacobian against the finite-difference oracle.
    ValidateJacobian(ValidateArgs),
    /// Re-run from an echoed `config.json`.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct SynthEnvArgs {
    #[arg(long)]
    nt: usize,
    #[arg(long)]
    nr: usize,
    #[arg(long)]
    ns: usize,
    /// Spectral norm of the scattering matrix, in [0, 1).
    #[arg(long, default_value_t = 0.9)]
    eta: f64,
    /// Multiplier on the backscatter-to-backscatter block, in [0, 1].
    #[arg(long, default_value_t = 1.0)]
    mc: f64,
    #[arg(long)]
    reciprocal: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long)]
    system: String,
    /// Override the partition; all three sets must be given together.
    #[arg(long, value_delimiter = ',')]
    tx: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    rx: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    bs: Option<Vec<usize>>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConstraintArg {
    Pin,
    Pm,
    Uni,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Rand,
    Fixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Model,
    Toggle,
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    Max,
    Min,
}

#[derive(Args)]
struct ConstraintArgs {
    #[arg(long, value_enum, default_value = "pin")]
    constraint: ConstraintArg,
    /// Custom ON state `re,im` for PIN/PM.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    r_on: Option<Vec<f64>>,
    /// Custom OFF state `re,im` for PIN/PM.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    r_off: Option<Vec<f64>>,
}

impl ConstraintArgs {
    fn build(&self) -> Result<LoadConstraint> {
        let kind = match self.constraint {
            ConstraintArg::Pin => ConstraintKind::Pin,
            ConstraintArg::Pm => ConstraintKind::Pm,
            ConstraintArg::Uni => ConstraintKind::Uni,
        };
        let base = LoadConstraint::from_kind(kind);
        if self.r_on.is_none() && self.r_off.is_none() {
            return Ok(base);
        }
        let Some((on, off)) = base.states() else {
            bail!("--r-on/--r-off only apply to PIN or PM");
        };
        let parse = |v: &Option<Vec<f64>>, default| -> Result<bsdof::Complex64> {
            match v.as_deref() {
                None => Ok(default),
                Some([re, im]) => Ok(bsdof::Complex64::new(*re, *im)),
                Some(other) => bail!("expected `re,im`, got {} values", other.len()),
            }
        };
        Ok(LoadConstraint::discrete(
            kind,
            parse(&self.r_on, on)?,
            parse(&self.r_off, off)?,
        )?)
    }
}

#[derive(Args)]
struct BsDistArgs {
    #[arg(long)]
    system: String,
    #[command(flatten)]
    constraint: ConstraintArgs,
    #[arg(long, value_enum, default_value = "rand")]
    policy: PolicyArg,
    /// Illumination file for `--policy fixed` (`[[re,im],..]`, `{"x":..}` or an optimize-x result).
    #[arg(long)]
    x_file: Option<PathBuf>,
    #[arg(long = "n", default_value_t = 10_000)]
    n_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "model")]
    mode: ModeArg,
    #[arg(long, default_value_t = bsdof::sampler::DEFAULT_BINS)]
    bins: usize,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    system: String,
    #[command(flatten)]
    constraint: ConstraintArgs,
    #[arg(long, value_enum, default_value = "max")]
    direction: DirectionArg,
    #[arg(long, default_value_t = 1500)]
    n_objective: usize,
    #[arg(long, default_value_t = 3)]
    starts: usize,
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    xtol: f64,
    #[arg(long, default_value_t = 1e-8)]
    ftol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Re-draw the load set at every objective evaluation.
    #[arg(long)]
    redraw: bool,
    #[arg(long, default_value_t = 10_000)]
    final_samples: usize,
    #[arg(long, default_value_t = bsdof::sampler::DEFAULT_BINS)]
    bins: usize,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    /// System to validate; without it a random sweep is generated.
    #[arg(long)]
    system: Option<String>,
    #[arg(long, default_value_t = 100)]
    instances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = bsdof::fd::DEFAULT_STEP)]
    step: f64,
    #[arg(long)]
    out_dir: PathBuf,
}

/// Salt separating the reported distribution's seed from the search seed.
const FINAL_SEED_SALT: u64 = 0xF1A1;

fn build(command: Command) -> Result<(RunConfig, PathBuf)> {
    Ok(match command {
        Command::SynthEnv(a) => {
            let mut environment = EnvironmentSpec::new(a.nt, a.nr, a.ns, a.eta, a.mc, a.seed);
            environment.reciprocal = a.reciprocal;
            environment.validate()?;
            (
                RunConfig::SynthEnv(SynthEnvConfig { environment }),
                a.out_dir,
            )
        }
        Command::Benchmark(a) => {
            let partition = match (a.tx, a.rx, a.bs) {
                (None, None, None) => None,
                (Some(tx_ports), Some(rx_ports), Some(bs_ports)) => Some(Partition {
                    tx_ports,
                    rx_ports,
                    bs_ports,
                }),
                _ => bail!("--tx, --rx and --bs must be given together"),
            };
            (
                RunConfig::Benchmark(BenchmarkConfig {
                    system: a.system,
                    partition,
                }),
                a.out_dir,
            )
        }
        Command::BsDist(a) => {
            let policy = match (a.policy, &a.x_file) {
                (PolicyArg::Rand, None) => PolicyConfig::Rand,
                (PolicyArg::Rand, Some(_)) => bail!("--x-file requires --policy fixed"),
                (PolicyArg::Fixed, None) => bail!("--policy fixed requires --x-file"),
                (PolicyArg::Fixed, Some(path)) => {
                    let text = std::fs::read_to_string(path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    PolicyConfig::fixed(&illumination_from_json(&text)?)
                }
            };
            let mode = match a.mode {
                ModeArg::Model => JacobianMode::Model,
                ModeArg::Toggle => JacobianMode::Toggle,
            };
            if a.n_samples == 0 || a.bins == 0 {
                bail!("--n and --bins must be at least 1");
            }
            let config = BsDistConfig {
                system: a.system,
                constraint: a.constraint.build()?,
                policy,
                n_samples: a.n_samples,
                seed: a.seed,
                mode,
                n_bins: a.bins,
            };
            (RunConfig::BsDist(config), a.out_dir)
        }
        Command::OptimizeX(a) => {
            let config = OptimizeConfig {
                system: a.system,
                constraint: a.constraint.build()?,
                direction: match a.direction {
                    DirectionArg::Max => Direction::Max,
                    DirectionArg::Min => Direction::Min,
                },
                n_objective_samples: a.n_objective,
                n_starts: a.starts,
                max_iterations: a.max_iter,
                x_tolerance: a.xtol,
                f_tolerance: a.ftol,
                seed: a.seed,
                redraw_load_set: a.redraw,
                final_seed: derive_seed(a.seed, FINAL_SEED_SALT),
                final_samples: a.final_samples,
                n_bins: a.bins,
            };
            (RunConfig::OptimizeX(config), a.out_dir)
        }
        Command::ValidateJacobian(a) => (
            RunConfig::ValidateJacobian(ValidateConfig {
                system: a.system,
                instances: a.instances,
                seed: a.seed,
                step: a.step,
            }),
            a.out_dir,
        ),
        Command::Run { config, out_dir } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            (
                serde_json::from_str(&text).context("parsing run config")?,
                out_dir,
            )
        }
    })
}

fn init_threads() -> Result<()> {
    let threads = match std::env::var("BSDOF_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .context("BSDOF_THREADS must be a nonnegative integer")?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()?;
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    let (config, out_dir) = build(cli.command)?;
    commands::run(&config, &out_dir)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    init_threads()?;
    execute(cli)
}
