//! End-to-end runs of the `firstdetect` binary and the command functions.

use std::path::{Path, PathBuf};
use std::process::Command;

use firstdetect::analytic::survival_halfline;
use firstdetect::cli::{cmd_sweep, RunOptions, Tolerances};
use firstdetect::C64;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_firstdetect"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str], out: &Path) -> (i32, String, String) {
    let output = binary().args(args).arg("--out").arg(out).output().unwrap();
    (
        output.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&output.stdout).into_owned(),
        String::from_utf8_lossy(&output.stderr).into_owned(),
    )
}

const SMALL_LATTICE: &str = r#"{
    "schema_version": 1, "name": "small", "route": "all",
    "system": {"kind": "lattice", "lattice": "finite", "n_sites": 6, "w": [[0.8, 0.3], 2],
               "initial": {"type": "site", "site": 4}, "tau": 0.01},
    "times": {"start": 0, "stop": 5, "count": 11}
}"#;

#[test]
fn simulate_writes_table_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "small.json", SMALL_LATTICE);
    let (code, stdout, stderr) = run(&["simulate", "--scenario", path.to_str().unwrap()], dir.path());
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("small.csv"));
    let table = std::fs::read_to_string(dir.path().join("small.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("route,w_re,w_im,t,survival,density"));
    // two strengths, stroboscopic and effective routes, 11 times each
    assert_eq!(lines.count(), 2 * 2 * 11);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("small.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["partial"], false);
    assert!(manifest["verdicts"].as_array().unwrap().iter().all(|v| v["passed"] == true));
    assert_eq!(manifest["timings"].as_array().unwrap().len(), 4);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a");
    let second = dir.path().join("b");
    let path = scenario("halfline_routes.json");
    for out in [&first, &second] {
        let (code, _, stderr) = run(&["simulate", "--scenario", path.to_str().unwrap()], out);
        assert_eq!(code, 0, "{stderr}");
    }
    let read = |d: &Path| std::fs::read(d.join("halfline_routes.csv")).unwrap();
    assert_eq!(read(&first), read(&second));
}

#[test]
fn bad_configuration_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = SMALL_LATTICE.replace("\"site\": 4", "\"site\": 9");
    let path = write(dir.path(), "bad.json", &bad);
    let (code, _, stderr) = run(&["simulate", "--scenario", path.to_str().unwrap()], dir.path());
    assert_eq!(code, 2, "{stderr}");
    let (code, _, _) = run(&["simulate", "--scenario", "/nonexistent/x.json"], dir.path());
    assert_eq!(code, 2);
    let path = write(dir.path(), "ok.json", SMALL_LATTICE);
    let (code, _, _) = run(&["simulate", "--scenario", path.to_str().unwrap(), "--tol-scale", "-1"], dir.path());
    assert_eq!(code, 2);
}

#[test]
fn numerical_failure_exits_with_3_and_keeps_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"schema_version": 1, "name": "strict", "route": "continuum",
        "system": {"kind": "continuum", "geometry": "half_line", "zeta": [[0.2, -0.5]],
                   "packet": {"type": "indicator", "start": 1, "end": 2, "value": 1}},
        "times": {"values": [0.5]}}"#;
    let path = write(dir.path(), "strict.json", text);
    let (code, _, stderr) = run(
        &["simulate", "--scenario", path.to_str().unwrap(), "--tol-scale", "1e-300"],
        dir.path(),
    );
    assert_eq!(code, 3, "{stderr}");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("strict.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["partial"], true);
    assert_eq!(manifest["errors"].as_array().unwrap().len(), 1);
}

#[test]
fn failed_verification_exits_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = run(&["verify", "--level", "fast", "--tol-scale", "1e-9"], dir.path());
    assert_eq!(code, 4);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("verify_report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], false);
}

#[test]
fn single_point_sweep_matches_library_value() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"schema_version": 1, "name": "one",
        "system": {"kind": "half_line", "alpha": {"values": [0.7]}, "beta": {"values": [-0.4]}, "n0": [3]}}"#;
    let path = write(dir.path(), "one.json", text);
    let opts = RunOptions {
        out_dir: dir.path().to_path_buf(),
        tol_scale: 1.0,
        route: None,
    };
    cmd_sweep(&path, &opts).unwrap();
    let table = std::fs::read_to_string(dir.path().join("one.csv")).unwrap();
    let row: Vec<&str> = table.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[4], "ok");
    let expected = survival_halfline(C64::new(0.7, -0.4), 3, &Tolerances::new(1.0).quadrature).unwrap();
    assert_eq!(row[3].parse::<f64>().unwrap(), expected);
}

#[test]
fn spectrum_lists_every_eigenvalue() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "small.json", SMALL_LATTICE);
    let (code, _, stderr) = run(&["spectrum", "--scenario", path.to_str().unwrap()], dir.path());
    assert_eq!(code, 0, "{stderr}");
    let table = std::fs::read_to_string(dir.path().join("small_spectrum.csv")).unwrap();
    assert_eq!(table.lines().filter(|l| l.contains("eigenvalue")).count(), 2 * 6);
}

#[test]
fn version_prints_name() {
    let output = binary().arg("version").output().unwrap();
    assert!(output.status.success());
    assert!(String::from_utf8_lossy(&output.stdout).starts_with("firstdetect "));
}

#[test]
fn bundled_scenarios_and_fuzz_seeds_parse_without_panicking() {
    let scenarios = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    for entry in std::fs::read_dir(&scenarios).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let ok = firstdetect::cli::parse_scenario(&text).is_ok() || firstdetect::cli::parse_sweep(&text).is_ok();
        assert!(ok, "{}", path.display());
    }
    let seeds = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus");
    for target in ["parse_scenario", "parse_sweep"] {
        for entry in std::fs::read_dir(seeds.join(target)).unwrap() {
            let text = std::fs::read_to_string(entry.unwrap().path()).unwrap();
            let _ = firstdetect::cli::parse_scenario(&text);
            let _ = firstdetect::cli::parse_sweep(&text);
        }
    }
    let robin = std::fs::read_to_string(seeds.join("parse_sweep/continuum.json")).unwrap();
    assert_eq!(firstdetect::cli::parse_sweep(&robin).unwrap().points().unwrap().len(), 10);
}
