use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fermion_dynamics::cli::{RunManifest, VerifyReport, MANIFEST_FILE, OUT_DIR_ENV};

const BIN: &str = env!("CARGO_BIN_EXE_fermion-dynamics");

fn config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str], cfg: &Path, out: &Path) -> Output {
    Command::new(BIN).args(args).arg("--config").arg(cfg).arg("--out").arg(out).env_remove(OUT_DIR_ENV).output().unwrap()
}

const GLAUBER: &str = r#"{
    "space": {"n": 6, "interval": [0, 3], "weights": "midpoint"},
    "kernel": {"type": "random_contraction", "params": {"seed": 17, "lambda_max": 0.85}},
    "family": {"kind": "glauber", "s": 0.5},
    "run": {"T": 200, "replicas": 2, "seed": 9, "draws": 500}
}"#;

#[test]
fn verify_passes_on_a_random_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "g.json", GLAUBER);
    let out = dir.path().join("out");
    let o = run(&["verify"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: VerifyReport = serde_json::from_str(&fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    assert!(report.passed);
    assert!(report.checks.iter().all(|c| c.passed));

    let kaw = GLAUBER.replace("\"glauber\"", "\"kawasaki\"");
    let cfg = config(dir.path(), "k.json", &kaw);
    assert_eq!(run(&["verify"], &cfg, &out).status.code(), Some(0));
}

#[test]
fn bad_exponent_exits_one_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "bad.json", &GLAUBER.replace("\"s\": 0.5", "\"s\": 1.5"));
    let o = run(&["verify"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("family.s"));

    let cfg = config(dir.path(), "typo.json", &GLAUBER.replace("\"seed\": 9", "\"sed\": 9"));
    let o = run(&["sample"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("run"));
}

#[test]
fn asymmetric_mobility_fails_the_suite() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{
        "space": {"n": 3},
        "kernel": {"type": "random_contraction", "params": {"seed": 5, "lambda_max": 0.7}},
        "family": {"kind": "kawasaki", "s": 0.5,
                   "mobility": {"type": "matrix", "entries": [[0, 1, 1], [2, 0, 1], [1, 1, 0]]}}
    }"#;
    let cfg = config(dir.path(), "asym.json", body);
    let out = dir.path().join("out");
    let o = run(&["verify"], &cfg, &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("balance_residual"));
    let report: VerifyReport = serde_json::from_str(&fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    assert!(report.failures().contains(&"balance_residual"));
    assert!(out.join(MANIFEST_FILE).exists());
    assert_eq!(run(&["spectrum"], &cfg, &out).status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical_and_manifests_are_complete() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "g.json", GLAUBER);
    for command in ["sample", "simulate", "spectrum", "correlations", "diagnose"] {
        let (a, b) = (dir.path().join(format!("{command}_a")), dir.path().join(format!("{command}_b")));
        assert_eq!(run(&[command], &cfg, &a).status.code(), Some(0), "{command}");
        assert_eq!(run(&[command], &cfg, &b).status.code(), Some(0), "{command}");
        let manifest: RunManifest = serde_json::from_str(&fs::read_to_string(a.join(MANIFEST_FILE)).unwrap()).unwrap();
        assert!(!manifest.outputs.is_empty());
        for f in &manifest.outputs {
            assert!(f.path.exists(), "{}", f.path.display());
            let other = b.join(&f.name);
            assert_eq!(fs::read(&f.path).unwrap(), fs::read(other).unwrap(), "{command}/{}", f.name);
        }
        assert_eq!(manifest.seed, 9);
    }
}

#[test]
fn flags_and_environment_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "g.json", GLAUBER);
    let env_out = dir.path().join("from_env");
    let o = Command::new(BIN)
        .args(["simulate", "--seed", "77", "--replicas", "3", "--config"])
        .arg(&cfg)
        .env(OUT_DIR_ENV, &env_out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: RunManifest = serde_json::from_str(&fs::read_to_string(env_out.join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(manifest.seed, 77);
    assert!(env_out.join("trajectory_2.csv").exists());
    assert!(!env_out.join("trajectory_3.csv").exists());
}

#[test]
fn output_formats() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "g.json", GLAUBER);
    let out = dir.path().join("out");
    assert_eq!(run(&["spectrum"], &cfg, &out).status.code(), Some(0));
    let gen = fs::read_to_string(out.join("generator.csv")).unwrap();
    assert_eq!(gen.lines().next(), Some("from,to,rate"));
    let spectrum: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("spectrum.json")).unwrap()).unwrap();
    assert!(spectrum["gap"].as_f64().unwrap() > 0.0);
    assert_eq!(spectrum["eigenvalues"].as_array().unwrap().len(), 64);

    assert_eq!(run(&["simulate"], &cfg, &out).status.code(), Some(0));
    let traj = fs::read_to_string(out.join("trajectory_0.csv")).unwrap();
    let mut lines = traj.lines();
    assert_eq!(lines.next(), Some("time,event,site,target,occupancy"));
    assert!(lines.next().unwrap().contains(",initial,"));

    assert_eq!(run(&["correlations"], &cfg, &out).status.code(), Some(0));
    let corr = fs::read_to_string(out.join("correlations.csv")).unwrap();
    assert_eq!(corr.lines().count(), 1 + 6 + 15);
}
