use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_gibbslab");

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(BIN).args(args).arg(config).arg("--out").arg(out).env_remove("GIBBSLAB_OUT").output().unwrap()
}

fn summary(out: &Path, command: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join(format!("{command}.json"))).unwrap()).unwrap()
}

fn check<'a>(s: &'a Value, name: &str) -> &'a Value {
    s["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap_or_else(|| panic!("no check {name}"))
}

const SMALL: &str = r#"
[model]
v = "harmonic"
w = "nelson"
lambda = 0.5

[grid]
half_width = 5.0
points = 101
dt = 0.25
t = 1.0
s = 0.5

[run]
seed = 3
sweeps = 4000
burnin = 200
chains = 2

[oracle]
sweeps = 60000
"#;

#[test]
fn harmonic_ground_energy() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[model]\nv = \"harmonic\"\n[run]\nseed = 1\n");
    let out = tmp.path().join("out");
    let o = run(&["solve-ground-state", "--strict"], &cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out, "solve-ground-state");
    let e0 = s["results"]["energy"].as_f64().unwrap();
    assert!((e0 - 0.5).abs() <= 1e-3, "{e0}");
    assert_eq!(s["passed"], true);
    // effective config with defaults resolved
    assert_eq!(s["config"]["grid"]["points"], 321);
    assert_eq!(s["config"]["model"]["w"], "nelson");
    let csv = std::fs::read_to_string(out.join("solve-ground-state_psi.csv")).unwrap();
    assert!(csv.starts_with("# config: {"));
}

#[test]
fn hydrogen_ground_energy() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[model]\nv = \"coulomb3d\"\n[grid]\nhalf_width = 40.0\npoints = 4000\n[run]\nseed = 1\n");
    let out = tmp.path().join("out");
    let o = run(&["solve-ground-state", "--strict"], &cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let e0 = summary(&out, "solve-ground-state")["results"]["energy"].as_f64().unwrap();
    assert!((e0 + 0.5).abs() <= 1e-3, "{e0}");
}

#[test]
fn nelson_conditions() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[model]\nv = \"harmonic\"\nw = \"nelson\"\nlambda = 1.0\n[run]\nseed = 1\n");
    let out = tmp.path().join("out");
    let o = run(&["conditions", "--strict"], &cfg, &out);
    assert!(o.status.success());
    let s = summary(&out, "conditions");
    assert_eq!(s["results"]["monotone"], true);
    let cinf = s["results"]["c_infinity"].as_f64().unwrap();
    assert!((cinf - std::f64::consts::PI).abs() < 1e-8);
    assert_eq!(check(&s, "w2_sufficient")["passed"], true);
    assert_eq!(s["results"]["alpha"], "inf");
}

#[test]
fn step_potential_is_not_monotone() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[model]\nw = \"step\"\n[run]\nseed = 1\n");
    let out = tmp.path().join("out");
    run(&["conditions"], &cfg, &out);
    let s = summary(&out, "conditions");
    assert_eq!(s["results"]["monotone"], false);
    assert!(s["results"]["monotone_witness"].is_array());
    assert_eq!(s["results"]["w2_monotone"]["holds"], false);
}

#[test]
fn zero_w_sample_strict() {
    let tmp = tempfile::tempdir().unwrap();
    let body = SMALL.replace("w = \"nelson\"", "w = \"zero\"").replace("sweeps = 4000", "sweeps = 30000");
    let cfg = write_config(tmp.path(), &body);
    let out = tmp.path().join("out");
    let o = run(&["sample", "--strict"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let s = summary(&out, "sample");
    assert_eq!(check(&s, "reference_marginal")["passed"], true);
    let jsonl = std::fs::read_to_string(out.join("sample.jsonl")).unwrap();
    let first: Value = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
    assert_eq!(first["config"]["run"]["seed"], 3);
    assert_eq!(jsonl.lines().count(), 1 + 2 * 30000 / 10);
}

#[test]
fn identical_config_gives_identical_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let mut seen = Vec::new();
    for _ in 0..2 {
        run(&["sample"], &cfg, &out);
        let files: Vec<Vec<u8>> = ["sample.json", "sample.jsonl", "sample_paths.csv"].iter().map(|f| std::fs::read(out.join(f)).unwrap()).collect();
        seen.push(files);
    }
    assert_eq!(seen[0], seen[1]);
}

#[test]
fn oracle_and_dlr_pass() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    for cmd in ["oracle-compare", "dlr-test"] {
        let o = run(&[cmd, "--strict"], &cfg, &out);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stdout));
    }
    let s = summary(&out, "dlr-test");
    assert!(s["results"]["max_exact_gap"].as_f64().unwrap() < 1e-12);
}

#[test]
fn pinned_oracle_compare() {
    let tmp = tempfile::tempdir().unwrap();
    let body = SMALL.replace("chains = 2", "chains = 2\nboundary = \"pinned\"\npin = [-1.0, 1.0]");
    let cfg = write_config(tmp.path(), &body);
    let out = tmp.path().join("out");
    let o = run(&["oracle-compare", "--strict"], &cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn strict_turns_failed_checks_into_exit_status() {
    let tmp = tempfile::tempdir().unwrap();
    let body = format!("{SMALL}tolerance = 1e-9\n");
    let cfg = write_config(tmp.path(), &body);
    let out = tmp.path().join("out");
    assert_eq!(run(&["oracle-compare"], &cfg, &out).status.code(), Some(0));
    assert_eq!(run(&["oracle-compare", "--strict"], &cfg, &out).status.code(), Some(1));
    assert_eq!(summary(&out, "oracle-compare")["passed"], false);
}

#[test]
fn energy_check_and_diagnose() {
    let tmp = tempfile::tempdir().unwrap();
    let body = format!("{SMALL}[diagnostics]\nreports = [\"ratio\", \"fkf\", \"hitting\"]\nhitting_samples = 2000\n");
    let body = body.replace("chains = 2", "chains = 2\npaths = 50");
    let cfg = write_config(tmp.path(), &body);
    let out = tmp.path().join("out");
    for cmd in ["energy-check", "diagnose"] {
        let o = run(&[cmd, "--strict"], &cfg, &out);
        assert!(o.status.success(), "{cmd}: {}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr));
    }
    let s = summary(&out, "energy-check");
    assert!(s["results"]["fold_gap"].as_f64().unwrap() < 1e-12);
    let d = summary(&out, "diagnose");
    assert!(d["results"]["fkf"]["order"].as_f64().unwrap() > 1.9);
}

#[test]
fn missing_seed_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[model]\nv = \"harmonic\"\n");
    let o = run(&["conditions"], &cfg, &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("run.seed"));
}

#[test]
fn config_errors_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    for (body, path) in [
        ("[run]\nseed = 1\n[grid]\npoints = \"many\"\n", "grid.points"),
        ("[run]\nseed = 1\n[model]\nv = \"quartic\"\n", "model.v"),
        ("[run]\nseed = 1\n[grid]\nt = 1.0\ns = 2.0\n", "grid.s"),
        ("[run]\nseed = 1\n[diagnostics]\nreports = [\"fkf\", \"nope\"]\n", "diagnostics.reports[1]"),
        ("[run]\nseed = 1\nsweep = 10\n", "run"),
    ] {
        let cfg = write_config(tmp.path(), body);
        let o = run(&["conditions"], &cfg, &tmp.path().join("out"));
        assert_eq!(o.status.code(), Some(2));
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(path), "expected {path} in {err}");
    }
}

#[test]
fn output_directory_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[run]\nseed = 1\n[output]\ndir = \"ignored\"\n");
    let env_dir = tmp.path().join("from_env");
    let o = Command::new(BIN).arg("conditions").arg(&cfg).env("GIBBSLAB_OUT", &env_dir).current_dir(tmp.path()).output().unwrap();
    assert!(o.status.success());
    assert!(env_dir.join("conditions.json").exists());
    assert!(!tmp.path().join("ignored").exists());
}
