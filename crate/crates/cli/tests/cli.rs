use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use multibump_cli::{config_from_manifest, RunConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_multibump"))
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("run.json");
    fs::write(&p, body).unwrap();
    p
}

fn run_with(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

fn stderr_json(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text
        .lines()
        .rev()
        .find(|l| l.starts_with('{'))
        .expect("json error on stderr");
    serde_json::from_str(line).unwrap()
}

const FREE: &str = r#""params": {"beta": 0.5, "epsilon": 0.0, "potential_p": {"family": "zero"}, "potential_q": {"family": "zero"}}"#;
const SLOW: &str = r#""params": {"beta": 0.5, "epsilon": 0.001, "potential_p": {"family": "polynomial", "a": 1.0, "k": 3.0}, "potential_q": {"family": "polynomial", "a": 1.0, "k": 3.0}}"#;

#[test]
fn ground_state_writes_the_sech_profile_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            r#"{{"command": "ground-state", {FREE}, "grid": {{"dim": 1, "half_width": 10.0, "nodes": 201}}}}"#
        ),
    );
    let out = dir.path().join("out");
    let o = run_with(&cfg, &out, &["--seed", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let csv = fs::read_to_string(out.join("w.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("r,w"));
    let mut worst = 0.0f64;
    for line in lines {
        let mut it = line.split(',').map(|s| s.parse::<f64>().unwrap());
        let (r, w) = (it.next().unwrap(), it.next().unwrap());
        if r <= 10.0 {
            worst = worst.max((w - 2f64.sqrt() / r.cosh()).abs());
        }
    }
    assert!(worst <= 1e-6, "{worst}");

    let m = manifest(&out);
    assert_eq!(m["status"], "ok");
    assert!((m["results"]["tail_constant"].as_f64().unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-3);
    let back = config_from_manifest(&out.join("manifest.json")).unwrap();
    let mut original = RunConfig::load(&cfg).unwrap();
    original.seed = 3;
    original.output_dir = Some(out.clone());
    assert_eq!(back, original);
}

#[test]
fn single_spike_solve_is_exact_and_logged() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            r#"{{"command": "solve", {FREE}, "grid": {{"dim": 1, "half_width": 40.0, "nodes": 1601}},
                "configuration": {{"dim": 1, "mu": 10.0, "centers": [[0.0]]}}}}"#
        ),
    );
    let out = dir.path().join("out");
    let o = run_with(&cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert!(m["results"]["star_norm"].as_f64().unwrap() < 1e-8);
    assert_eq!(m["results"]["positive"], true);
    let log = fs::read_to_string(out.join("log.jsonl")).unwrap();
    assert!(!log.is_empty());
    for line in log.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert!(v["iteration"].as_u64().unwrap() >= 1);
    }
    let header = fs::read_to_string(out.join("solution.csv")).unwrap();
    assert!(header.starts_with("x,u,v\n"));
}

#[test]
fn ladder_writes_positive_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            r#"{{"command": "ladder", {SLOW}, "grid": {{"dim": 1, "half_width": 50.0, "nodes": 2001}},
                "ladder": {{"m_max": 2, "mu": 10.0}}}}"#
        ),
    );
    let out = dir.path().join("out");
    let o = run_with(&cfg, &out, &["--verbose"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("ladder.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("m,R_m,gap"));
    let gaps: Vec<f64> = lines
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(gaps.len(), 2);
    assert!(gaps.iter().all(|&g| g > 0.0), "{gaps:?}");
    assert_eq!(manifest(&out)["results"]["all_gaps_positive"], true);
}

#[test]
fn diagnose_emits_plot_series() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            r#"{{"command": "diagnose", {FREE}, "grid": {{"dim": 1, "half_width": 32.0, "nodes": 1281}}}}"#
        ),
    );
    let out = dir.path().join("out");
    let o = run_with(&cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let decay = fs::read_to_string(out.join("residual_decay.csv")).unwrap();
    assert!(decay.starts_with("mu,log_star_norm\n"));
    assert_eq!(decay.lines().count(), 4);
    let inter = fs::read_to_string(out.join("interaction.csv")).unwrap();
    assert!(inter.starts_with("d,ratio_to_gamma1\n"));
}

#[test]
fn spectrum_reports_the_translation_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            r#"{{"command": "spectrum", {FREE}, "grid": {{"dim": 1, "half_width": 20.0, "nodes": 401}}}}"#
        ),
    );
    let out = dir.path().join("out");
    let o = run_with(&cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert_eq!(m["results"]["nondegeneracy"]["kernel_dim"], 1);
    assert_eq!(m["results"]["nondegeneracy"]["passed"], true);
    let csv = fs::read_to_string(out.join("eigenvalues.csv")).unwrap();
    assert!(csv.starts_with("index,eigenvalue,sector,residual\n"));
}

#[test]
fn optimizer_outputs_are_byte_identical_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            r#"{{"command": "optimize", {SLOW}, "grid": {{"dim": 1, "half_width": 30.0, "nodes": 1201}},
                "configuration": {{"dim": 1, "mu": 10.0, "centers": [[1.0]]}},
                "optimizer": {{"restarts": 3}}}}"#
        ),
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run_with(&cfg, &a, &["--seed", "11"]).status.success());
    assert!(bin()
        .env("MULTIBUMP_THREADS", "1")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&b)
        .args(["--seed", "11"])
        .status()
        .unwrap()
        .success());
    for name in ["solution.csv", "log.jsonl"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn exit_codes_distinguish_parse_validation_and_solver_failures() {
    let dir = tempfile::tempdir().unwrap();

    let bad = write_config(dir.path(), "{ not json");
    let o = run_with(&bad, &dir.path().join("p"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["kind"], "parse");

    let far = write_config(
        dir.path(),
        &format!(
            r#"{{"command": "solve", {FREE}, "grid": {{"dim": 1, "half_width": 20.0, "nodes": 401}},
                "configuration": {{"dim": 1, "mu": 10.0, "centers": [[15.0]]}}}}"#
        ),
    );
    let out = dir.path().join("v");
    let o = run_with(&far, &out, &[]);
    assert_eq!(o.status.code(), Some(4));
    let err: Value =
        serde_json::from_str(&fs::read_to_string(out.join("error.json")).unwrap()).unwrap();
    assert_eq!(err["kind"], "validation");
    assert_eq!(err["exit_code"], 4);

    // β = 0.6 makes the single-spike linearization degenerate
    let singular = write_config(
        dir.path(),
        r#"{"command": "solve",
            "params": {"beta": 0.6, "epsilon": 0.0, "potential_p": {"family": "zero"}, "potential_q": {"family": "zero"}},
            "grid": {"dim": 1, "half_width": 30.0, "nodes": 601},
            "configuration": {"dim": 1, "mu": 10.0, "centers": [[0.0]]}}"#,
    );
    let o = run_with(&singular, &dir.path().join("s"), &[]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["kind"], "solver");

    let o = bin()
        .env("MULTIBUMP_THREADS", "zero")
        .arg("--config")
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));

    let o = bin().arg("--bogus-flag").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
