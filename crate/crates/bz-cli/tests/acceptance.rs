//! CLI-level acceptance: exit-code contract, run-manifest determinism
//! (byte-identical CSV on rerun), the report spot values, the fault
//! injection hook, and the qualitative 2-D sweep.

use std::path::Path;
use std::process::{Command, Output};

fn bz() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bz"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn run(args: &[&str]) -> Output {
    bz().args(args).output().expect("bz invocation failed")
}

fn passed(criterion: &str, summary: &str) {
    println!("criterion {criterion} PASS: {summary}");
}

#[test]
fn missing_config_exits_2_and_names_the_path() {
    let out = run(&["analyze", "--config", "/definitely/not/here.toml"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("/definitely/not/here.toml"), "stderr: {err}");
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    write(&cfg, "params = \"nonsense\"");
    let out = run(&["analyze", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analyze_reports_the_reference_roots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("analyze.toml");
    write(&cfg, "[params]\npreset = \"classic\"\nh = 1.0\n");
    let out_dir = dir.path().join("run");
    let out = run(&[
        "analyze",
        "--config",
        cfg.to_str().unwrap(),
        "--output",
        out_dir.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: toml::Value =
        toml::from_str(&std::fs::read_to_string(out_dir.join("report.toml")).unwrap()).unwrap();
    let u_bar = report["roots"]["u_bar"].as_float().unwrap();
    let u_tilde = report["roots"]["u_tilde"].as_float().unwrap();
    assert!((u_bar - 0.9999936).abs() < 1e-7, "u_bar = {u_bar}");
    assert!((u_tilde - 0.96801).abs() < 1e-5, "u_tilde = {u_tilde}");
    passed("1 (cli)", &format!("analyze reported u_bar = {u_bar:.9}, u_tilde = {u_tilde:.9}"));
}

#[test]
fn criterion_8_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.toml");
    write(
        &cfg,
        r#"
seed = 99

[params]
preset = "classic"
h = 1.0

[simulate]
t_final = 0.01
write_final_fields = true

[simulate.initial]
kind = "random-box"
lo = 0.05
hi = 0.9
"#,
    );
    let run_a = dir.path().join("a");
    let run_b = dir.path().join("b");
    for out_dir in [&run_a, &run_b] {
        let out = run(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--output",
            out_dir.to_str().unwrap(),
            "--quiet",
        ]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["manifest.toml", "envelope.csv", "final_u.csv", "final_v.csv", "report.toml"] {
        let a = std::fs::read(run_a.join(name)).unwrap();
        let b = std::fs::read(run_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    passed("8", "repeated run with the same manifest is byte-identical");
}

#[test]
fn verify_passes_clean_and_fails_with_skewed_propagator() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("verify.toml");
    write(
        &cfg,
        r#"
seed = 5

[params]
preset = "classic"
h = 1.0

[verify]
suite_trials = 15
suite_points = 128
invariance_samples = 2
invariance_t = 0.02
box_m = 2.0
probe_amplitude = 1e-6
probe_t = 1.0
"#,
    );
    let clean = dir.path().join("clean");
    let out = run(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--output",
        clean.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    // Fault injection: a skewed heat multiplier must flip the exit code.
    let skewed = dir.path().join("skewed");
    let out = bz()
        .args([
            "verify",
            "--config",
            cfg.to_str().unwrap(),
            "--output",
            skewed.to_str().unwrap(),
            "--quiet",
        ])
        .env("BZ_FAULT_HEAT_SKEW", "1e-6")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "skewed build must fail verification");
    passed("2 (cli)", "verify exits 0 clean and 1 under the skewed-propagator hook");
}

#[test]
fn trap_time_writes_one_row_per_sample() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("trap.toml");
    write(
        &cfg,
        r#"
[params]
preset = "classic"
h = 1.0

[trap_time]
c_star_values = [1e-4, 5e-5]
m_values = [1.0, 2.0]
entry_check = false
"#,
    );
    let out_dir = dir.path().join("run");
    let out = run(&[
        "trap-time",
        "--config",
        cfg.to_str().unwrap(),
        "--output",
        out_dir.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("trap_times.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 1 + 4, "header plus one row per (c*, m) pair");
    assert!(lines[0].starts_with("c_star,m,q1,q2,q3"));
    passed("6 (cli)", "trap-time emitted the threshold table");
}

#[test]
fn criterion_9_sweep_reports_nonuniformity_indices() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    write(
        &cfg,
        r#"
seed = 3

[params]
preset = "classic"

[grid]
dim = 2
extent = 25.0
points = 32

[sweep]
h_values = [0.25, 4.0]
t_final = 0.02
amplitude = 0.5
width = 2.0
frames = 2
"#,
    );
    let out_dir = dir.path().join("run");
    let out = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--output",
        out_dir.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    let mut indices = Vec::new();
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 4);
        indices.push((
            cols[0].parse::<f64>().unwrap(),
            cols[3].parse::<f64>().unwrap(),
        ));
    }
    assert_eq!(indices.len(), 2);
    for (h, idx) in &indices {
        assert!(idx.is_finite() && *idx >= 0.0, "index for h = {h} is {idx}");
    }
    // Frames were written for each h.
    assert!(out_dir.join("h_00/frame_000000.pgm").exists());
    // Non-gating by design: the index is reported, not thresholded.
    passed(
        "9",
        &format!(
            "sweep indices by h: {:?} (qualitative, non-gating)",
            indices
        ),
    );
}

#[test]
fn sweep_requires_a_two_dimensional_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep1d.toml");
    write(&cfg, "[grid]\ndim = 1\nextent = 25.0\npoints = 32\n");
    let out = run(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
