//! End-to-end runs of the subcommands, parsed from argument lists.

use std::path::{Path, PathBuf};

use clap::Parser;
use serde_json::{json, Value};

use crate::{execute, Cli};

fn bsdof(args: &[&str]) -> anyhow::Result<()> {
    execute(Cli::try_parse_from(
        std::iter::once("bsdof").chain(args.iter().copied()),
    )?)
}

fn ok(args: &[&str]) {
    if let Err(e) = bsdof(args) {
        panic!("{args:?} failed: {e:#}");
    }
}

fn read_json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, nt: u32, nr: u32, ns: u32, extra: &[&str]) -> PathBuf {
    let (nt, nr, ns) = (nt.to_string(), nr.to_string(), ns.to_string());
    let mut args = vec![
        "synth-env",
        "--nt",
        &nt,
        "--nr",
        &nr,
        "--ns",
        &ns,
        "--out-dir",
        s(dir),
    ];
    args.extend_from_slice(extra);
    ok(&args);
    dir.join("system.json")
}

/// Writes a 5-port system (tx 0, rx 1–2, bs 3–4) whose `S_RS` block is `s_rs`.
fn system_with_s_rs(path: &Path, s_rs: [[f64; 2]; 2]) {
    let n = 5;
    let mut m = vec![[0.0, 0.0]; n * n];
    for (i, row) in s_rs.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            m[(1 + i) * n + 3 + j] = [*v, 0.0];
        }
    }
    m[n] = [0.1, 0.0];
    m[3 * n] = [0.1, 0.0];
    let doc = json!({
        "n_total": n,
        "tx_ports": [0],
        "rx_ports": [1, 2],
        "bs_ports": [3, 4],
        "reference_impedance_ohms": 50.0,
        "matrix": m,
    });
    std::fs::write(path, doc.to_string()).unwrap();
}

#[test]
fn synth_env_port_count() {
    let tmp = tempfile::tempdir().unwrap();
    let sys = synth(
        tmp.path(),
        3,
        4,
        64,
        &["--eta", "0.9", "--mc", "1.0", "--seed", "7"],
    );
    let doc = read_json(&sys);
    assert_eq!(doc["n_total"], 71);
    assert_eq!(doc["matrix"].as_array().unwrap().len(), 71 * 71);
    assert!(read_json(tmp.path().join("config.json")).is_object());
}

#[test]
fn synth_env_without_coupling_has_zero_bs_block() {
    let tmp = tempfile::tempdir().unwrap();
    let doc = read_json(synth(tmp.path(), 2, 2, 6, &["--mc", "0", "--seed", "3"]));
    let n = doc["n_total"].as_u64().unwrap() as usize;
    let bs: Vec<usize> = doc["bs_ports"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap() as usize)
        .collect();
    let m = doc["matrix"].as_array().unwrap();
    for &i in &bs {
        for &j in &bs {
            assert_eq!(m[i * n + j], json!([0.0, 0.0]));
        }
    }
}

#[test]
fn system_file_round_trips_bit_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let path = synth(tmp.path(), 2, 3, 5, &["--seed", "11"]);
    let sys = bsdof::io::read_system(&path).unwrap();
    let again = tmp.path().join("again.json");
    bsdof::io::write_system(&again, &sys).unwrap();
    assert_eq!(bsdof::io::read_system(&again).unwrap(), sys);
    assert_eq!(
        std::fs::read(&path).unwrap(),
        std::fs::read(&again).unwrap()
    );
}

#[test]
fn invalid_arguments_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(bsdof(&[
        "synth-env",
        "--nt",
        "1",
        "--nr",
        "1",
        "--ns",
        "1",
        "--eta",
        "1.5",
        "--out-dir",
        s(tmp.path())
    ])
    .is_err());
    assert!(bsdof(&[
        "benchmark",
        "--system",
        s(&tmp.path().join("missing.json")),
        "--out-dir",
        s(tmp.path())
    ])
    .is_err());
    assert!(bsdof(&[
        "bs-dist",
        "--system",
        "x.json",
        "--policy",
        "fixed",
        "--out-dir",
        s(tmp.path())
    ])
    .is_err());
}

#[test]
fn benchmark_orthonormal_and_rank_one() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("ortho.json");
    system_with_s_rs(&path, [[0.5, 0.0], [0.0, 0.5]]);
    let out = tmp.path().join("ortho");
    ok(&["benchmark", "--system", s(&path), "--out-dir", s(&out)]);
    let m = read_json(out.join("benchmark.json"))["m"].as_f64().unwrap();
    assert!((m - 2.0).abs() < 1e-12, "{m}");

    let path = tmp.path().join("rank1.json");
    system_with_s_rs(&path, [[0.3, 0.3], [0.3, 0.3]]);
    let out = tmp.path().join("rank1");
    ok(&["benchmark", "--system", s(&path), "--out-dir", s(&out)]);
    let doc = read_json(out.join("benchmark.json"));
    assert!((doc["m"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(doc["singular_values"].as_array().unwrap().len(), 2);
}

#[test]
fn benchmark_partition_override() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("ortho.json");
    system_with_s_rs(&path, [[0.5, 0.0], [0.0, 0.5]]);
    let out = tmp.path().join("swap");
    // A single receiver caps the benchmark at one mode.
    ok(&[
        "benchmark",
        "--system",
        s(&path),
        "--tx",
        "0",
        "--rx",
        "1",
        "--bs",
        "2,3,4",
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(read_json(out.join("benchmark.json"))["n_tilde"], 1);
}

#[test]
fn rich_scattering_benchmark_is_near_upper_bound() {
    let tmp = tempfile::tempdir().unwrap();
    for seed in 0..10 {
        let dir = tmp.path().join(format!("s{seed}"));
        let sys = synth(
            &dir,
            3,
            4,
            64,
            &["--eta", "0.9", "--seed", &seed.to_string()],
        );
        ok(&[
            "benchmark",
            "--system",
            s(&sys),
            "--out-dir",
            s(&dir.join("b")),
        ]);
        let m = read_json(dir.join("b/benchmark.json"))["m"]
            .as_f64()
            .unwrap();
        assert!((0.85 * 4.0..=4.0).contains(&m), "seed {seed}: M = {m}");
    }
}

#[test]
fn bs_dist_artifacts_and_repeatability() {
    let tmp = tempfile::tempdir().unwrap();
    let sys = synth(&tmp.path().join("env"), 3, 4, 16, &["--seed", "2"]);
    let run = |name: &str| {
        let out = tmp.path().join(name);
        ok(&[
            "bs-dist",
            "--system",
            s(&sys),
            "--policy",
            "rand",
            "--constraint",
            "pin",
            "--n",
            "2000",
            "--seed",
            "1",
            "--out-dir",
            s(&out),
        ]);
        out
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["samples.csv", "histogram.csv", "summary.json"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let samples = std::fs::read_to_string(a.join("samples.csv")).unwrap();
    let mut lines = samples.lines();
    assert_eq!(lines.next(), Some("sample_index,m_value"));
    assert_eq!(lines.count(), 2000);
    let hist = std::fs::read_to_string(a.join("histogram.csv")).unwrap();
    assert!(hist.starts_with("bin_center,density\n"));
    // Densities integrate to one over the bins.
    let rows: Vec<(f64, f64)> = hist
        .lines()
        .skip(1)
        .map(|l| {
            let (c, d) = l.split_once(',').unwrap();
            (c.parse().unwrap(), d.parse().unwrap())
        })
        .collect();
    let width = rows[1].0 - rows[0].0;
    let total: f64 = rows.iter().map(|r| r.1 * width).sum();
    assert!((total - 1.0).abs() < 1e-9, "{total}");
    let summary = read_json(a.join("summary.json"));
    assert_eq!(summary["n_samples"], 2000);
    assert!(summary["mean"].as_f64().unwrap() >= 1.0);
}

#[test]
fn bs_dist_fixed_without_coupling_collapses() {
    let tmp = tempfile::tempdir().unwrap();
    let sys = synth(
        &tmp.path().join("env"),
        3,
        4,
        16,
        &["--mc", "0", "--seed", "4"],
    );
    let x = tmp.path().join("x.json");
    std::fs::write(&x, "[[0.6, 0.0], [0.0, 0.8], [0.0, 0.0]]").unwrap();
    let out = tmp.path().join("d");
    ok(&[
        "bs-dist",
        "--system",
        s(&sys),
        "--policy",
        "fixed",
        "--x-file",
        s(&x),
        "--n",
        "3000",
        "--out-dir",
        s(&out),
    ]);
    assert!(read_json(out.join("summary.json"))["std"].as_f64().unwrap() < 1e-12);
}

#[test]
fn toggle_mode_runs_for_discrete_loads_only() {
    let tmp = tempfile::tempdir().unwrap();
    let sys = synth(&tmp.path().join("env"), 2, 3, 8, &["--seed", "5"]);
    let out = tmp.path().join("t");
    ok(&[
        "bs-dist",
        "--system",
        s(&sys),
        "--mode",
        "toggle",
        "--constraint",
        "pm",
        "--n",
        "500",
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(read_json(out.join("summary.json"))["mode"], "toggle");
    assert!(bsdof(&[
        "bs-dist",
        "--system",
        s(&sys),
        "--mode",
        "toggle",
        "--constraint",
        "uni",
        "--n",
        "10",
        "--out-dir",
        s(&out)
    ])
    .is_err());
}

#[test]
fn optimize_max_exceeds_min_and_writes_result() {
    let tmp = tempfile::tempdir().unwrap();
    let sys = synth(&tmp.path().join("env"), 3, 4, 16, &["--seed", "1"]);
    let run = |dir: &str| {
        let out = tmp.path().join(dir);
        ok(&[
            "optimize-x",
            "--system",
            s(&sys),
            "--constraint",
            "uni",
            "--direction",
            dir,
            "--n-objective",
            "300",
            "--starts",
            "2",
            "--final-samples",
            "3000",
            "--seed",
            "3",
            "--out-dir",
            s(&out),
        ]);
        read_json(out.join("result.json"))
    };
    let (max, min) = (run("max"), run("min"));
    assert_eq!(max["best_x"].as_array().unwrap().len(), 3);
    assert!(max["final_mean"].as_f64().unwrap() >= min["final_mean"].as_f64().unwrap());
    assert!(tmp.path().join("max/samples.csv").exists());
    // The optimum feeds straight back into bs-dist.
    let out = tmp.path().join("again");
    ok(&[
        "bs-dist",
        "--system",
        s(&sys),
        "--policy",
        "fixed",
        "--x-file",
        s(&tmp.path().join("max/result.json")),
        "--constraint",
        "uni",
        "--n",
        "100",
        "--out-dir",
        s(&out),
    ]);
}

#[test]
fn single_transmitter_policies_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let sys = synth(&tmp.path().join("env"), 1, 3, 12, &["--seed", "6"]);
    let n = 4000.0;
    let mut stats = Vec::new();
    for dir in ["max", "min"] {
        let out = tmp.path().join(dir);
        ok(&[
            "optimize-x",
            "--system",
            s(&sys),
            "--direction",
            dir,
            "--n-objective",
            "200",
            "--starts",
            "2",
            "--final-samples",
            "4000",
            "--seed",
            "9",
            "--out-dir",
            s(&out),
        ]);
        let summary = read_json(out.join("summary.json"));
        stats.push((
            summary["mean"].as_f64().unwrap(),
            summary["std"].as_f64().unwrap(),
        ));
    }
    let out = tmp.path().join("rand");
    ok(&[
        "bs-dist",
        "--system",
        s(&sys),
        "--n",
        "4000",
        "--seed",
        "10",
        "--out-dir",
        s(&out),
    ]);
    let summary = read_json(out.join("summary.json"));
    stats.push((
        summary["mean"].as_f64().unwrap(),
        summary["std"].as_f64().unwrap(),
    ));
    for a in 0..3 {
        for b in a + 1..3 {
            let pooled = ((stats[a].1.powi(2) + stats[b].1.powi(2)) / n).sqrt();
            assert!(
                (stats[a].0 - stats[b].0).abs() <= 3.0 * pooled + 1e-12,
                "{stats:?}"
            );
        }
    }
}

#[test]
fn replay_from_echoed_config() {
    let tmp = tempfile::tempdir().unwrap();
    let sys = synth(&tmp.path().join("env"), 2, 2, 10, &["--seed", "8"]);
    let first = tmp.path().join("first");
    ok(&[
        "bs-dist",
        "--system",
        s(&sys),
        "--constraint",
        "uni",
        "--n",
        "1500",
        "--seed",
        "4",
        "--out-dir",
        s(&first),
    ]);
    let config = read_json(first.join("config.json"));
    assert_eq!(config["command"], "bs-dist");
    assert_eq!(config["n_samples"], 1500);
    let second = tmp.path().join("second");
    ok(&[
        "run",
        "--config",
        s(&first.join("config.json")),
        "--out-dir",
        s(&second),
    ]);
    for f in [
        "samples.csv",
        "histogram.csv",
        "summary.json",
        "config.json",
    ] {
        assert_eq!(
            std::fs::read(first.join(f)).unwrap(),
            std::fs::read(second.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn validate_jacobian_reports_small_errors() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&[
        "validate-jacobian",
        "--instances",
        "20",
        "--seed",
        "1",
        "--out-dir",
        s(tmp.path()),
    ]);
    let doc = read_json(tmp.path().join("validation.json"));
    assert_eq!(doc["instances"], 20);
    assert!(doc["max_rel_error_fd"].as_f64().unwrap() < 1e-5);
    assert!(doc["max_column_space_residual"].as_f64().unwrap() < 1e-10);
}
