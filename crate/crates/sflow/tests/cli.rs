use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn sflow(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sflow")).args(args).arg("--out").arg(out).output().unwrap()
}

fn config_arg(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn figure_bundles_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    for which in ["1", "2", "3"] {
        let (a, b) = (dir.path().join(format!("a{which}")), dir.path().join(format!("b{which}")));
        assert!(sflow(&["figure", which, "--seed", "9"], &a).status.success());
        assert!(sflow(&["figure", which, "--seed", "9", "--threads", "2"], &b).status.success());
        for f in ["paths.csv", "flow.csv", "figure.json"] {
            assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "figure {which} {f}");
        }
    }
    let r = json(dir.path().join("a2/figure.json"));
    assert_eq!(r["sigma0"], serde_json::json!([[0.36, 0.0], [0.0, 1.0]]));
    assert_eq!(r["sigma1"], serde_json::json!([[2.25, 0.0], [0.0, 0.25]]));
    let r = json(dir.path().join("a3/figure.json"));
    assert_eq!(r["flow"]["trajectories"], 64);
    assert!(r["flow"]["max_acceleration"].as_f64().unwrap() <= 1e-8);
    assert!(r["rotation"].is_array());
    let r = json(dir.path().join("a1/figure.json"));
    assert!(r["flow"]["max_acceleration"].as_f64().unwrap() <= 1e-8);
    let paths = fs::read_to_string(dir.path().join("a1/paths.csv")).unwrap();
    assert_eq!(paths.lines().count(), 1 + 25 * 201);
    assert!(paths.starts_with("path,t,x0\n"));
    let marg = fs::read_to_string(dir.path().join("a1/marginals.csv")).unwrap();
    assert_eq!(marg.lines().count(), 1 + 5 * 401);
}

#[test]
fn build_reports_noise_and_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let out = sflow(&["build", "--config", &config_arg("figure1.json")], dir.path());
    assert!(out.status.success());
    let r = json(dir.path().join("interpolant.json"));
    assert!((r["noise_cov"][0][0].as_f64().unwrap() - 0.9).abs() < 1e-12);
    assert_eq!(r["config"]["seed"], 0);

    let out = sflow(&["build", "--config", &config_arg("same_cov_2d.json")], dir.path());
    assert!(out.status.success());
    let r = json(dir.path().join("interpolant.json"));
    assert_eq!(r["schedule"]["kind"], "sqrt_bridge");
    assert_eq!(r["noise_cov"], r["config"]["p0"]["cov"]);
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"seed": 1,
            "p0": {"kind": "gaussian", "mean": [0.0, 0.0], "cov": [[1.0, 2.0], [2.0, 1.0]]},
            "p1": {"kind": "gaussian", "mean": [0.0, 0.0], "cov": [[1.0, 0.0], [0.0, 1.0]]},
            "interpolant": {"builder": "multivariate"}}"#,
    )
    .unwrap();
    let out = sflow(&["build", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("p0") && msg.contains("positive definite"), "{msg}");

    let no_seed = dir.path().join("noseed.json");
    fs::write(&no_seed, r#"{"p0": {"kind": "uniform", "lo": [0], "hi": [1]}, "p1": {"kind": "uniform", "lo": [0], "hi": [1]}, "interpolant": {"builder": "bridge"}}"#).unwrap();
    assert_eq!(sflow(&["sample", "--config", no_seed.to_str().unwrap()], dir.path()).status.code(), Some(2));
    assert_eq!(sflow(&["diagnose"], dir.path()).status.code(), Some(2));
    assert_eq!(sflow(&["figure", "4"], dir.path()).status.code(), Some(2));
}

#[test]
fn touching_supports_are_explained() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg: Value = serde_json::from_str(&fs::read_to_string(configs().join("nogo_unimodal.json")).unwrap()).unwrap();
    cfg["nogo"]["s0"]["hi"] = 0.0.into();
    cfg["nogo"]["s1"]["lo"] = 0.0.into();
    let path = dir.path().join("touch.json");
    fs::write(&path, cfg.to_string()).unwrap();
    let out = sflow(&["nogo", "--config", path.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not disconnected"));
}

#[test]
fn violated_certificate_sets_exit_code_four_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_arg("nogo_uniform_mixture.json");
    let out = sflow(&["nogo", "--config", &cfg], dir.path());
    assert!(out.status.success());
    let r = json(dir.path().join("nogo.json"));
    assert_eq!(r["certificate"]["verdict"], "violated");
    assert!(r["certificate"]["p_enter"].as_f64().unwrap() >= 0.25 - 3.0 * r["certificate"]["se_enter"].as_f64().unwrap());
    let out = sflow(&["nogo", "--config", &cfg, "--fail-on-violation"], dir.path());
    assert_eq!(out.status.code(), Some(4));
    assert!(dir.path().join("crossing.csv").exists());
}

#[test]
fn unimodal_target_is_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let out = sflow(&["nogo", "--config", &config_arg("nogo_unimodal.json"), "--fail-on-violation"], dir.path());
    assert!(out.status.success());
    assert_eq!(json(dir.path().join("nogo.json"))["certificate"]["verdict"], "consistent");
}

#[test]
fn diagnose_separates_straight_and_curved() {
    let dir = tempfile::tempdir().unwrap();
    let out = sflow(&["diagnose", "--config", &config_arg("affine_independent.json")], dir.path());
    assert!(out.status.success());
    let r = json(dir.path().join("diagnose.json"));
    assert_eq!(r["verdict"], "not straight");
    assert!(r["analytic"]["burgers_max"].as_f64().unwrap() > 0.1);

    let out = sflow(&["diagnose", "--config", &config_arg("same_cov_2d.json")], dir.path());
    assert!(out.status.success());
    assert_eq!(json(dir.path().join("diagnose.json"))["verdict"], "straight");
}

#[test]
fn bound_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = sflow(&["bound", "--epsilon", "0.01", "--gap", "1"], dir.path());
    assert!(out.status.success());
    let r = json(dir.path().join("bound.json"));
    assert!((r["bound"].as_f64().unwrap() - 0.2).abs() < 1e-15);
    assert!((r["delta_star"].as_f64().unwrap() - 0.1).abs() < 1e-15);
    assert_eq!(sflow(&["bound", "--epsilon", "0.01", "--gap", "0"], dir.path()).status.code(), Some(2));
}

#[test]
fn sample_and_flow_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_arg("figure1.json");
    assert!(sflow(&["sample", "--config", &cfg], dir.path()).status.success());
    assert!(sflow(&["flow", "--config", &cfg], dir.path()).status.success());
    let flow = fs::read_to_string(dir.path().join("flow.csv")).unwrap();
    assert_eq!(flow.lines().count(), 1 + 50 * 201);
    let r = json(dir.path().join("flow.json"));
    assert!(r["flow"]["straightness_deviation"].as_f64().unwrap() <= 1e-8);
    // bridges have no closed-form field
    let bridge = dir.path().join("bridge.json");
    fs::write(&bridge, r#"{"seed": 3, "p0": {"kind": "gaussian", "mean": [0], "cov": [[1]]}, "p1": {"kind": "gaussian", "mean": [0], "cov": [[1]]}, "interpolant": {"builder": "bridge", "sigma": 0.5}}"#).unwrap();
    assert!(sflow(&["sample", "--config", bridge.to_str().unwrap()], dir.path()).status.success());
    assert_eq!(sflow(&["flow", "--config", bridge.to_str().unwrap()], dir.path()).status.code(), Some(2));
}
