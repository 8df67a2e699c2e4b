use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hydrostrip(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hydrostrip"))
        .args(args)
        .current_dir(cwd)
        .env_remove("HYDROSTRIP_OUTPUT_ROOT")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

const HEAT: &[&str] = &[
    "run-limit", "--family", "heat", "--nx", "16", "--ny", "16", "--dt", "1e-3", "--horizon", "0.02",
    "--sample-every", "5", "--lambda", "32", "--output-dir", "out",
];

#[test]
fn heat_run_writes_the_run_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let summary = stdout_json(&hydrostrip(HEAT, tmp.path()));
    let dir = Path::new(summary["dir"].as_str().unwrap());
    let dir = if dir.is_absolute() { dir.to_path_buf() } else { tmp.path().join(dir) };
    for f in ["config.json", "band.csv", "norms.csv", "certificates.csv"] {
        assert!(dir.join(f).is_file(), "missing {f}");
    }
    assert!(dir.join("fields").join("u_00000.bin").is_file());
    assert!(dir.join("series").is_dir());
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("config.json")).unwrap()).unwrap();
    assert_eq!(manifest["kind"], "limit");
    assert_eq!(manifest["lambda"], 32.0);
    let certs = summary["certificates"].as_array().unwrap();
    assert!(certs.iter().any(|c| c["name"] == "limit_energy"));
    for c in certs {
        assert_eq!(c["status"], "holds", "{c}");
    }
}

#[test]
fn rerun_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let sa = stdout_json(&hydrostrip(HEAT, a.path()));
    let sb = stdout_json(&hydrostrip(HEAT, b.path()));
    assert_eq!(sa["certificates"], sb["certificates"]);
    let read = |root: &Path, s: &Value| {
        let d = root.join(s["dir"].as_str().unwrap());
        std::fs::read(d.join("norms.csv")).unwrap()
    };
    assert_eq!(read(a.path(), &sa), read(b.path(), &sb));
}

#[test]
fn verify_recomputes_written_certificates() {
    let tmp = tempfile::tempdir().unwrap();
    let run = stdout_json(&hydrostrip(HEAT, tmp.path()));
    let out = stdout_json(&hydrostrip(&["verify", "--root", "out"], tmp.path()));
    assert_eq!(out["status"], "verified");
    let runs = out["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 1);
    assert_eq!(runs[0]["certificates"], run["certificates"]);
}

#[test]
fn verify_on_an_empty_root_reports_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::create_dir(tmp.path().join("empty")).unwrap();
    let out = stdout_json(&hydrostrip(&["verify", "--root", "empty"], tmp.path()));
    assert_eq!(out["status"], "nothing to verify");
}

#[test]
fn invalid_config_is_a_json_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = hydrostrip(&["run-limit", "--family", "heat", "--nx", "16", "--ny", "16", "--horizon", "0.01", "--eps", "0"], tmp.path());
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
    assert!(err["error"].is_string());
    assert!(err["message"].as_str().unwrap().contains("eps"));

    std::fs::write(tmp.path().join("bad.json"), r#"{"nx": 16, "unknown_key": 1}"#).unwrap();
    let out = hydrostrip(&["run-limit", "--config", "bad.json"], tmp.path());
    assert!(!out.status.success());
    let _: Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
}

#[test]
fn sweep_writes_csv_with_slope() {
    let tmp = tempfile::tempdir().unwrap();
    let out = stdout_json(&hydrostrip(
        &[
            "sweep", "--family", "analytic-band", "--nx", "16", "--ny", "16", "--dt", "1e-3", "--horizon", "0.02",
            "--eps", "0.5,0.25", "--lambda", "32", "--band", "4", "--modes", "4", "--output-dir", "out",
        ],
        tmp.path(),
    ));
    let csv = tmp.path().join(out["csv"].as_str().unwrap());
    let text = std::fs::read_to_string(csv).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "eps,error_total,error_sup,error_dy,error_eps32,slope,intercept");
    assert_eq!(rows.len(), 3);
    assert!(out["result"]["slope"].as_f64().unwrap().is_finite());
}

#[test]
fn output_root_variable_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let elsewhere = tmp.path().join("elsewhere");
    let out = Command::new(env!("CARGO_BIN_EXE_hydrostrip"))
        .args(HEAT)
        .current_dir(tmp.path())
        .env("HYDROSTRIP_OUTPUT_ROOT", &elsewhere)
        .output()
        .unwrap();
    stdout_json(&out);
    assert!(!tmp.path().join("out").exists());
    assert_eq!(std::fs::read_dir(&elsewhere).unwrap().count(), 1);
}

#[test]
fn norms_reads_a_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    let run = stdout_json(&hydrostrip(HEAT, tmp.path()));
    let snap = tmp.path().join(run["dir"].as_str().unwrap()).join("fields").join("u_00000.bin");
    let out = stdout_json(&hydrostrip(&["norms", snap.to_str().unwrap()], tmp.path()));
    assert_eq!(out["name"], "u");
    assert!(out["besov_with_mean"].as_f64().unwrap() > 0.0);
}
