//! End-to-end tests of the `dfsslab` binary: every subcommand, the file
//! formats it reads and writes, exit codes, and seeded determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dfsslab"))
}

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dfsslab-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("scratch dir");
    dir
}

fn write_fixture(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).expect("fixture write");
    path
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stdout_json(output: &Output) -> serde_json::Value {
    assert!(
        output.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).expect("stdout is JSON")
}

const ALL_EQUAL_3: &str = r#"{"n": 3, "delta": [[0.0, 0.9, 0.9], [0.9, 0.0, 0.9], [0.9, 0.9, 0.0]]}"#;
const TIED_3: &str = r#"{"n": 3, "delta": [[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]]}"#;
const DISTINCT_3: &str = r#"{"n": 3, "delta": [[0.0, 3.0, 2.0], [3.0, 0.0, 1.0], [2.0, 1.0, 0.0]]}"#;
const DICKE_2: &str = r#"{"n": 2, "delta": [[0.0, 1.0], [1.0, 0.0]]}"#;

#[test]
fn analyze_reports_the_all_equal_cdfs() {
    let dir = scratch_dir("analyze");
    let delta = write_fixture(&dir, "allequal.json", ALL_EQUAL_3);
    let out = run(binary()
        .arg("analyze")
        .arg("--delta")
        .arg(&delta)
        .args(["--sector", "1", "--robust-order", "2"]));
    let report = stdout_json(&out);
    assert_eq!(report["schema"], 1);
    assert_eq!(report["n"], 3);
    let sector = &report["sectors"][0];
    assert_eq!(sector["m"], 1);
    assert_eq!(sector["dfs_dim"], 2);
    assert_eq!(sector["cdfs_dim"], 2);
    assert_eq!(report["robust"][0]["order"], 1);
    assert!(report["degeneracy"]["cdfs_lower_bound"].as_u64().unwrap() >= 1);
}

#[test]
fn analyze_rejects_asymmetric_input_without_the_escape_hatch() {
    let dir = scratch_dir("asym");
    let delta = write_fixture(
        &dir,
        "asym.json",
        r#"{"n": 2, "delta": [[0.0, 1.0], [1.5, 0.0]]}"#,
    );
    let out = run(binary().arg("analyze").arg("--delta").arg(&delta));
    assert_eq!(out.status.code(), Some(1));

    let out = run(binary()
        .arg("analyze")
        .arg("--delta")
        .arg(&delta)
        .arg("--symmetrize"));
    assert!(out.status.success());
}

#[test]
fn resultant_classifies_tied_and_distinct_couplings() {
    let dir = scratch_dir("resultant");
    let tied = write_fixture(&dir, "tied.json", TIED_3);
    let report = stdout_json(&run(binary().arg("resultant").arg("--delta").arg(&tied)));
    assert_eq!(report["decision"], "cdfs_exists");
    let roots = report["common_roots"].as_array().unwrap();
    assert_eq!(roots.len(), 1);
    assert!((roots[0].as_f64().unwrap() + 2.0).abs() < 1e-7);

    let distinct = write_fixture(&dir, "distinct.json", DISTINCT_3);
    let report = stdout_json(&run(binary().arg("resultant").arg("--delta").arg(&distinct)));
    assert_eq!(report["decision"], "none");
    assert!(report["common_roots"].as_array().unwrap().is_empty());
}

#[test]
fn evolve_emits_a_stationary_trace_for_a_protected_state() {
    let dir = scratch_dir("evolve");
    let delta = write_fixture(&dir, "dicke.json", DICKE_2);
    let out = run(binary()
        .arg("evolve")
        .arg("--delta")
        .arg(&delta)
        .args(["--kappa", "1.0", "--state", "cdfs:1:0", "--tmax", "10", "--points", "21"]));
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,F2"));
    let mut rows = 0;
    for line in lines {
        let (t, f2) = line.split_once(',').expect("two columns");
        let f2: f64 = f2.parse().unwrap();
        let _t: f64 = t.parse().unwrap();
        assert!(f2 >= 1.0 - 1e-8, "protected state must keep F2 = 1: {line}");
        rows += 1;
    }
    assert_eq!(rows, 21);
}

#[test]
fn evolve_supports_explicit_amplitudes_and_ode_backend() {
    let dir = scratch_dir("evolve-ode");
    let delta = write_fixture(&dir, "dicke.json", DICKE_2);
    // (|01> - |10>)/sqrt(2) written out as amplitudes.
    let state = r#"[[0,0],[0.7071067811865476,0],[-0.7071067811865476,0],[0,0]]"#;
    let out = run(binary()
        .arg("evolve")
        .arg("--delta")
        .arg(&delta)
        .args(["--state", state, "--tmax", "2", "--points", "5", "--backend", "ode"]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    for line in text.lines().skip(1) {
        let f2: f64 = line.split_once(',').unwrap().1.parse().unwrap();
        assert!(f2 >= 1.0 - 1e-7);
    }
}

#[test]
fn evolve_regime_sweep_writes_one_file_per_epsilon() {
    let dir = scratch_dir("sweep");
    let delta = write_fixture(&dir, "tied.json", TIED_3);
    let out_base = dir.join("trace.csv");
    let out = run(binary()
        .arg("evolve")
        .arg("--delta")
        .arg(&delta)
        .args(["--state", "dfs:1:0", "--tmax", "1", "--points", "5"])
        .args(["--regime", "weak", "--eps", "0.1,0.05"])
        .arg("--out")
        .arg(&out_base));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for eps in ["0.1", "0.05"] {
        let path = dir.join(format!("trace_eps{eps}.csv"));
        let text = std::fs::read_to_string(&path).expect("sweep file exists");
        assert!(text.starts_with("t,F2\n"));
    }
}

#[test]
fn evolve_rejects_bad_state_and_bad_regime() {
    let dir = scratch_dir("badstate");
    let delta = write_fixture(&dir, "dicke.json", DICKE_2);
    let out = run(binary()
        .arg("evolve")
        .arg("--delta")
        .arg(&delta)
        .args(["--state", "dfs:1:7", "--tmax", "1", "--points", "3"]));
    assert_eq!(out.status.code(), Some(1));

    let out = run(binary()
        .arg("evolve")
        .arg("--delta")
        .arg(&delta)
        .args(["--state", "ground", "--tmax", "1", "--points", "3"])
        .args(["--regime", "sideways", "--eps", "0.1"]));
    assert_eq!(out.status.code(), Some(1));

    // Multi-epsilon sweeps to stdout are ambiguous.
    let out = run(binary()
        .arg("evolve")
        .arg("--delta")
        .arg(&delta)
        .args(["--state", "ground", "--tmax", "1", "--points", "3"])
        .args(["--regime", "weak", "--eps", "0.1,0.2"]));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sample_gaussian_ensemble_finds_nothing() {
    let out = run(binary()
        .arg("sample")
        .args(["--ensemble", "gaussian_symmetric", "--n", "4"])
        .args(["--samples", "1000", "--seed", "7"]));
    let report = stdout_json(&out);
    assert_eq!(report["schema"], 1);
    assert_eq!(report["hit_fraction"], 0.0);
    assert_eq!(report["disagreements"], 0);
    assert_eq!(report["detector"], "both");
}

#[test]
fn sample_structured_ensemble_always_hits() {
    let out = run(binary()
        .arg("sample")
        .args(["--ensemble", "all_equal", "--n", "3"])
        .args(["--samples", "50", "--seed", "3", "--detector", "subspace"]));
    let report = stdout_json(&out);
    assert_eq!(report["hit_fraction"], 1.0);
}

#[test]
fn sample_output_is_byte_identical_under_a_fixed_seed() {
    let args = [
        "sample",
        "--ensemble",
        "gaussian_symmetric",
        "--n",
        "3",
        "--samples",
        "100",
        "--seed",
        "42",
    ];
    let a = run(binary().args(args));
    let b = run(binary().args(args));
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn qubit_cap_flows_from_env_and_flag() {
    let out = run(binary()
        .env("DFSSLAB_NMAX", "3")
        .arg("sample")
        .args(["--ensemble", "gaussian_symmetric", "--n", "4"])
        .args(["--samples", "5", "--seed", "1"]));
    assert_eq!(out.status.code(), Some(1));

    // The flag overrides the environment.
    let out = run(binary()
        .env("DFSSLAB_NMAX", "3")
        .arg("sample")
        .args(["--nmax", "5", "--ensemble", "gaussian_symmetric", "--n", "4"])
        .args(["--samples", "5", "--seed", "1"]));
    assert!(out.status.success());

    let out = run(binary()
        .env("DFSSLAB_NMAX", "banana")
        .arg("sample")
        .args(["--ensemble", "gaussian_symmetric", "--n", "3"])
        .args(["--samples", "5", "--seed", "1"]));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn tolerance_flags_reach_the_reports() {
    let dir = scratch_dir("tolflags");
    let delta = write_fixture(&dir, "allequal.json", ALL_EQUAL_3);
    let out = run(binary()
        .arg("analyze")
        .arg("--delta")
        .arg(&delta)
        .args(["--sector", "1", "--tol-rank", "1e-6", "--cluster-tol", "0.5"]));
    let report = stdout_json(&out);
    assert_eq!(report["tolerances"]["rank_rel"], 1e-6);
    assert_eq!(report["tolerances"]["cluster_abs"], 0.5);
}
