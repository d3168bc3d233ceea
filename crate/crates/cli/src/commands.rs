use anyhow::{bail, Context, Result};
use bsdof::io::{illumination_to_pairs, read_system, write_system};
use bsdof::linalg::spectral_norm;
use bsdof::sampler::{
    histogram, sample_distribution_with_mode, system_fingerprint, DofDistribution,
};
use bsdof::{
    benchmark_eemdof, optimize_illumination, synth_environment, validate_jacobians,
    IlluminationPolicy, LoadConstraint, OptimizationConfig, ScatteringSystem,
};
use serde::Serialize;
use serde_json::json;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::config::*;

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn echo_config(out: &Path, config: &RunConfig) -> Result<()> {
    write_json(&out.join("config.json"), config)
}

fn load_system(path: &str) -> Result<ScatteringSystem> {
    read_system(path).with_context(|| format!("loading scattering system {path}"))
}

pub fn run(config: &RunConfig, out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    match config {
        RunConfig::SynthEnv(c) => synth_env(c, out)?,
        RunConfig::Benchmark(c) => benchmark(c, out)?,
        RunConfig::BsDist(c) => bs_dist(c, out)?,
        RunConfig::OptimizeX(c) => optimize_x(c, out)?,
        RunConfig::ValidateJacobian(c) => validate_jacobian(c, out)?,
    }
    echo_config(out, config)
}

fn synth_env(c: &SynthEnvConfig, out: &Path) -> Result<()> {
    let sys = synth_environment(&c.environment)?;
    let path = out.join("system.json");
    write_system(&path, &sys)?;
    println!(
        "wrote {} (N = {}, N_T = {}, N_R = {}, N_S = {}, spectral norm {:.12})",
        path.display(),
        sys.n_total(),
        sys.n_t(),
        sys.n_r(),
        sys.n_s(),
        spectral_norm(sys.matrix())
    );
    Ok(())
}

fn benchmark(c: &BenchmarkConfig, out: &Path) -> Result<()> {
    let mut sys = load_system(&c.system)?;
    if let Some(p) = &c.partition {
        sys = sys.with_partition(p.tx_ports.clone(), p.rx_ports.clone(), p.bs_ports.clone())?;
    }
    let blocks = sys.blocks();
    let res = benchmark_eemdof(&blocks)?;
    write_json(
        &out.join("benchmark.json"),
        &json!({
            "m": res.m,
            "n_tilde": res.n_tilde,
            "singular_values": res.singular_values,
            "n_r": sys.n_r(),
            "n_s": sys.n_s(),
            "system_id": system_fingerprint(&sys),
        }),
    )?;
    println!(
        "conventional EEMDOF of S_RS: M = {:.6} (upper bound {})",
        res.m, res.n_tilde
    );
    Ok(())
}

fn write_distribution(
    d: &DofDistribution,
    constraint: &LoadConstraint,
    n_bins: usize,
    out: &Path,
) -> Result<()> {
    let mut w = csv::Writer::from_path(out.join("samples.csv"))?;
    w.write_record(["sample_index", "m_value"])?;
    for (i, m) in d.samples.iter().enumerate() {
        w.write_record([i.to_string(), m.to_string()])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(out.join("histogram.csv"))?;
    w.write_record(["bin_center", "density"])?;
    for (center, density) in histogram(d, n_bins)? {
        w.write_record([center.to_string(), density.to_string()])?;
    }
    w.flush()?;

    write_json(
        &out.join("summary.json"),
        &json!({
            "mean": d.mean,
            "std": d.std,
            "n_samples": d.n_samples,
            "seed": d.seed,
            "redraw_count": d.redraw_count,
            "constraint": constraint,
            "policy": d.policy,
            "mode": d.mode,
            "n_tilde": d.n_tilde,
            "system_id": d.system_id,
        }),
    )
}

fn bs_dist(c: &BsDistConfig, out: &Path) -> Result<()> {
    let sys = load_system(&c.system)?;
    let policy = c.policy.to_policy()?;
    let d =
        sample_distribution_with_mode(&sys, &policy, &c.constraint, c.n_samples, c.seed, c.mode)?;
    write_distribution(&d, &c.constraint, c.n_bins, out)?;
    println!(
        "BS-EEMDOF over {} samples: mean {:.6}, std {:.6} ({} redraws)",
        d.n_samples, d.mean, d.std, d.redraw_count
    );
    Ok(())
}

fn optimize_x(c: &OptimizeConfig, out: &Path) -> Result<()> {
    if c.final_seed == c.seed {
        bail!("final_seed must differ from the optimization seed");
    }
    let sys = load_system(&c.system)?;
    let cfg = OptimizationConfig {
        direction: c.direction,
        n_objective_samples: c.n_objective_samples,
        n_starts: c.n_starts,
        max_iterations: c.max_iterations,
        x_tolerance: c.x_tolerance,
        f_tolerance: c.f_tolerance,
        seed: c.seed,
        redraw_load_set: c.redraw_load_set,
    };
    let res = optimize_illumination(&sys, &c.constraint, &cfg)?;
    let d = sample_distribution_with_mode(
        &sys,
        &IlluminationPolicy::Fixed(res.best_x.clone()),
        &c.constraint,
        c.final_samples,
        c.final_seed,
        bsdof::JacobianMode::Model,
    )?;
    write_json(
        &out.join("result.json"),
        &json!({
            "best_x": illumination_to_pairs(&res.best_x),
            "best_objective": res.best_objective,
            "direction": res.direction,
            "seed": c.seed,
            "final_seed": c.final_seed,
            "per_start_trace": res.per_start_trace,
            "objective_evaluations": res.objective_evaluations,
            "hyperparameters": {
                "nelder_mead": res.nelder_mead,
                "n_objective_samples": cfg.n_objective_samples,
                "n_starts": cfg.n_starts,
                "redraw_load_set": cfg.redraw_load_set,
            },
            "final_mean": d.mean,
            "final_std": d.std,
        }),
    )?;
    write_distribution(&d, &c.constraint, c.n_bins, out)?;
    println!(
        "{:?} objective {:.6} on the optimization set; fresh {}-sample mean {:.6}, std {:.6}",
        res.direction, res.best_objective, d.n_samples, d.mean, d.std
    );
    Ok(())
}

fn validate_jacobian(c: &ValidateConfig, out: &Path) -> Result<()> {
    let fixed = c.system.as_deref().map(load_system).transpose()?;
    let report = validate_jacobians(fixed.as_ref(), c.instances, c.seed, c.step)?;
    write_json(&out.join("validation.json"), &report)?;
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "instances:                    {}", report.instances)?;
    writeln!(
        stdout,
        "max rel. error vs FD oracle:  {:.3e}",
        report.max_rel_error_fd
    )?;
    writeln!(
        stdout,
        "max column-space residual:    {:.3e}",
        report.max_column_space_residual
    )?;
    writeln!(
        stdout,
        "max S_RS·B factorization err: {:.3e}",
        report.max_factorization_error
    )?;
    Ok(())
}
