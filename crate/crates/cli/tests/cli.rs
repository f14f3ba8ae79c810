use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn penflow(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_penflow"))
        .args(args)
        .arg("--out-dir")
        .arg(out_dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const SCALAR_FB: &str = r#"{"instance": "scalar", "mode": "FB", "T": 1e4,
 "schedule": {"family": "polynomial", "r": 0.1, "s": 0.2, "b": 1, "lambda_bar": 0.9, "gamma_bar": 1}}"#;

#[test]
fn minimal_run_exits_zero_with_small_gap() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SCALAR_FB);
    let out = penflow(&["run", &cfg], &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["final_gap"].as_f64().unwrap() <= 0.05);
    let traj = fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    let last = traj.lines().last().unwrap();
    let gap: f64 = last.split(',').nth(3).unwrap().parse().unwrap();
    assert!(gap <= 0.05);
}

#[test]
fn rejected_schedule_exits_two_and_names_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let text = SCALAR_FB
        .replace("\"scalar\"", "\"skew-box\"")
        .replace("\"FB\"", "\"FBF\"")
        .replace("\"r\": 0.1", "\"r\": 0.2");
    let cfg = write_config(dir.path(), "v.json", &text);
    for verb in ["run", "validate"] {
        let out = penflow(&[verb, &cfg], dir.path());
        assert_eq!(out.status.code(), Some(2), "{verb}");
        assert!(String::from_utf8_lossy(&out.stdout).contains("r+s<1/3"), "{verb}");
    }
}

#[test]
fn deblur_config_emits_images() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "d.json",
        r#"{"instance": {"deblur": {"rows": 32, "cols": 32, "square": 8}},
            "schedule": {"family": "polynomial", "r": 0.05, "s": 0.25, "b": 1, "lambda_bar": 0.318, "gamma_bar": 1},
            "integrator": {"mode": "FBF", "grid": {"kind": "uniform", "h": 1, "T": 1e9}, "record_every": 500, "max_steps": 3000},
            "seed": 7}"#,
    );
    let out_dir = dir.path().join("img");
    let out = penflow(&["run", &cfg], &out_dir);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["degraded.pgm", "restored.pgm", "isnr.csv"] {
        assert!(out_dir.join(name).exists(), "{name}");
    }
}

#[test]
fn seed_override_replaces_config_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "d.json",
        r#"{"instance": {"deblur": {"rows": 8, "cols": 8, "square": 2, "kernel_size": 3, "sigma": 1}},
            "schedule": {"family": "polynomial", "r": 0.05, "s": 0.25, "b": 1, "lambda_bar": 0.318, "gamma_bar": 1},
            "integrator": {"mode": "FBF", "grid": {"kind": "uniform", "h": 1, "T": 1e9}, "max_steps": 10},
            "seed": 1}"#,
    );
    let meta = |args: &[&str], sub: &str| {
        let d = dir.path().join(sub);
        let mut all = args.to_vec();
        all.push(&cfg);
        assert_eq!(penflow(&all, &d).status.code(), Some(0));
        let v: serde_json::Value = serde_json::from_slice(&fs::read(d.join("degradation.json")).unwrap()).unwrap();
        v["seed"].as_u64().unwrap()
    };
    assert_eq!(meta(&["run"], "a"), 1);
    assert_eq!(meta(&["--seed-override", "42", "run"], "b"), 42);
}

#[test]
fn oracle_verb_prints_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let out = penflow(&["oracle", "shifted-segment"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let cert: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cert["solution_set"]["kind"], "segment");
    assert_eq!(cert["least_norm_point"], serde_json::json!([1.0, 0.0]));

    let bad = penflow(&["oracle", "nope"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("unknown instance"));
}

#[test]
fn parse_errors_exit_one_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", "{\n  \"instance\": \"scalar\",\n  \"mode\": \"FB\",,\n}");
    let out = penflow(&["run", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");

    let missing = penflow(&["validate", "/nonexistent/config.json"], dir.path());
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn fb_on_skew_is_a_precondition_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.json", &SCALAR_FB.replace("\"scalar\"", "\"skew-box\""));
    let out_dir = dir.path().join("never");
    let out = penflow(&["run", &cfg], &out_dir);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cocoerciv"));
    assert!(!out_dir.exists());
}
