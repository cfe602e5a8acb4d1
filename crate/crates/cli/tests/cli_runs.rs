//! End-to-end runs of the escape-lab binary: exit codes, file outputs,
//! manifest reproducibility and thread-count determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_escape-lab")
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("escape-lab-test-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, name: &str, json: &serde_json::Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(json).unwrap()).unwrap();
    path
}

fn run(args: &[&str]) -> std::process::Output {
    Command::new(bin()).args(args).output().unwrap()
}

#[test]
fn certify_exp_exits_zero_with_unverified_certificate() {
    let dir = tmp_dir("certify-exp");
    let out = dir.join("out");
    let cfg = write_config(
        &dir,
        "cfg.json",
        &serde_json::json!({
            "function": {"kind": "ScaledExp", "lambda": 1.0},
            "command": "certify",
            "output_dir": out,
            "certify": {"logR1": 10f64.ln(), "c_schedule": [2.0, 2.0, 2.0, 2.0], "n_max": 3}
        }),
    );
    let res = run(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&res.stderr)
    );
    let cert: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("certificate.json")).unwrap()).unwrap();
    assert_eq!(cert["verified"], serde_json::json!(false));
    assert_eq!(cert["log_base"], serde_json::json!("e"));
    assert!(cert["margins"][0].as_f64().unwrap() < 0.0);
}

#[test]
fn order_quarter_cosh_reports_quarter() {
    let dir = tmp_dir("order-qc");
    let out = dir.join("out");
    let cfg = write_config(
        &dir,
        "cfg.json",
        &serde_json::json!({
            "function": {"kind": "QuarterCosh"},
            "command": "order",
            "output_dir": out,
            "profile": {"r_min": 1e2, "r_max": 1e8, "points_per_decade": 8},
            "order": {"tail_fraction": 0.25}
        }),
    );
    let res = run(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&res.stderr)
    );
    let rep: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("growth_report.json")).unwrap()).unwrap();
    let rho = rep["order_estimate"].as_f64().unwrap();
    assert!((rho - 0.25).abs() < 0.02, "rho = {rho}");
    // profile CSV exists with the documented header
    let csv = fs::read_to_string(out.join("profile.csv")).unwrap();
    assert!(csv.starts_with("r,logM,logm,method\n"));
}

#[test]
fn oversized_grid_is_rejected_with_exit_two() {
    let dir = tmp_dir("grid-budget");
    let cfg = write_config(
        &dir,
        "cfg.json",
        &serde_json::json!({
            "function": {"kind": "ScaledExp", "lambda": 1.0},
            "command": "grid",
            "output_dir": dir.join("out"),
            "grid": {
                "center": [0.0, 0.0], "width": 1.0, "height": 1.0,
                "nx": 4096, "ny": 4096, "max_iter": 10, "bailout": 1e6,
                "pixel_budget": 1048576
            }
        }),
    );
    let res = run(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(
        !dir.join("out").exists(),
        "no output directory on validation failure"
    );
}

#[test]
fn malformed_config_exits_two() {
    let dir = tmp_dir("bad-config");
    let path = dir.join("cfg.json");
    fs::write(&path, "{ not json").unwrap();
    let res = run(&["--config", path.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));

    let cfg = write_config(
        &dir,
        "cfg2.json",
        &serde_json::json!({
            "function": {"kind": "CanonicalProduct", "rho": 0.7, "c": 1.0, "truncation_tol": 1e-9},
            "command": "certify",
            "certify": {"logR1": 1.0, "c_schedule": [2.0, 2.0], "n_max": 1}
        }),
    );
    let res = run(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2), "rho = 0.7 is outside (0, 1/2)");
}

fn grid_config(out: &Path) -> serde_json::Value {
    serde_json::json!({
        "function": {"kind": "ScaledExp", "lambda": 1.0},
        "command": "grid",
        "output_dir": out,
        "seed": 7,
        "grid": {
            "center": [0.8, 0.0], "width": 3.0, "height": 2.0,
            "nx": 96, "ny": 64, "max_iter": 40, "bailout": 1e6,
            "confirm_steps": 3,
            "fast": {"logR": 0.0, "L_max": 4},
            "bd": {"disc": {"center": [0.3, 0.0], "radius": 0.2}, "include_n0": false}
        }
    })
}

fn read_outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .filter(|(name, _)| name != "manifest.json")
        .collect();
    files.sort();
    files
}

#[test]
fn grid_outputs_bit_identical_across_thread_counts() {
    let dir = tmp_dir("grid-threads");
    let out1 = dir.join("t1");
    let out8 = dir.join("t8");
    let cfg1 = write_config(&dir, "cfg1.json", &grid_config(&out1));
    let cfg8 = write_config(&dir, "cfg8.json", &grid_config(&out8));
    let r1 = run(&["--config", cfg1.to_str().unwrap(), "--threads", "1"]);
    let r8 = run(&["--config", cfg8.to_str().unwrap(), "--threads", "8"]);
    assert_eq!(
        r1.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&r1.stderr)
    );
    assert_eq!(r8.status.code(), Some(0));
    let f1 = read_outputs(&out1);
    let f8 = read_outputs(&out8);
    assert_eq!(f1.len(), f8.len());
    for ((n1, b1), (n8, b8)) in f1.iter().zip(f8.iter()) {
        assert_eq!(n1, n8);
        assert_eq!(b1, b8, "{n1} differs between thread counts");
    }
    // the expected artifact set
    let names: Vec<&str> = f1.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(
        names,
        vec![
            "bd.ppm",
            "class.ppm",
            "connectivity.json",
            "fast.ppm",
            "julia.ppm"
        ]
    );
}

#[test]
fn rerunning_from_manifest_config_reproduces_outputs_byte_identically() {
    let dir = tmp_dir("manifest-roundtrip");
    let out1 = dir.join("first");
    let cfg = write_config(&dir, "cfg.json", &grid_config(&out1));
    let res = run(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0));

    // extract the echoed config from the manifest and rerun it elsewhere
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out1.join("manifest.json")).unwrap()).unwrap();
    let echoed = manifest["config"].clone();
    let cfg2 = write_config(&dir, "cfg2.json", &echoed);
    let out2 = dir.join("second");
    let res2 = run(&[
        "--config",
        cfg2.to_str().unwrap(),
        "--out",
        out2.to_str().unwrap(),
    ]);
    assert_eq!(
        res2.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&res2.stderr)
    );

    let f1 = read_outputs(&out1);
    let f2 = read_outputs(&out2);
    assert_eq!(f1.len(), f2.len());
    for ((n1, b1), (n2, b2)) in f1.iter().zip(f2.iter()) {
        assert_eq!(n1, n2);
        assert_eq!(b1, b2, "{n1} differs after manifest round-trip");
    }
}

#[test]
fn report_command_emits_certification_label() {
    let dir = tmp_dir("report");
    let out = dir.join("out");
    let cfg = write_config(
        &dir,
        "cfg.json",
        &serde_json::json!({
            "function": {"kind": "CanonicalProduct", "rho": 0.25, "c": 1.0, "truncation_tol": 1e-6},
            "command": "report",
            "output_dir": out,
            "profile": {"r_min": 1e2, "r_max": 1e8, "points_per_decade": 6},
            "order": {"tail_fraction": 0.25, "epsilon": 0.5, "R": 100.0},
            "certify": {"logR1": 1e3f64.ln(), "c_schedule": [2.0, 2.0, 2.0, 2.0], "n_max": 3},
            "curves": {"disc": {"center": [-1.5, 0.0], "radius": 0.1}, "attestation": "user-asserted"}
        }),
    );
    let res = run(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&res.stderr)
    );
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["certificate"]["verified"], serde_json::json!(true));
    assert_eq!(summary["curves"]["all_ok"], serde_json::json!(true));
    assert_eq!(
        summary["curves"]["attestation"],
        serde_json::json!("user-asserted")
    );
    let label = summary["label"].as_str().unwrap();
    assert!(
        label.starts_with("no unbounded Fatou components certified numerically on tested range"),
        "label: {label}"
    );
    let rho = summary["order"]["order_estimate"].as_f64().unwrap();
    assert!((rho - 0.25).abs() < 0.02);
    for file in [
        "profile.csv",
        "growth_report.json",
        "certificate.json",
        "curves.json",
    ] {
        assert!(out.join(file).exists(), "{file} missing");
    }
}

#[test]
fn threads_env_var_fallback() {
    let dir = tmp_dir("env-threads");
    let out = dir.join("out");
    let cfg = write_config(&dir, "cfg.json", &grid_config(&out));
    let res = Command::new(bin())
        .args(["--config", cfg.to_str().unwrap()])
        .env("ESCAPE_LAB_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(0));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["threads"], serde_json::json!(2));
}

#[test]
fn computation_error_exits_three() {
    // n_max = 4 from log 1e3 on the quarter-order product needs
    // log R_5 ~ exp(1e40), past the log-domain range
    let dir = tmp_dir("exit3");
    let cfg = write_config(
        &dir,
        "cfg.json",
        &serde_json::json!({
            "function": {"kind": "CanonicalProduct", "rho": 0.25, "c": 1.0, "truncation_tol": 1e-6},
            "command": "certify",
            "output_dir": dir.join("out"),
            "certify": {"logR1": 1e3f64.ln(), "c_schedule": [2.0, 2.0, 2.0, 2.0, 2.0], "n_max": 4}
        }),
    );
    let res = run(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(
        res.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&res.stderr)
    );
}

#[test]
fn no_files_written_outside_output_dir() {
    let dir = tmp_dir("containment");
    let out = dir.join("only-here");
    let cfg = write_config(
        &dir,
        "cfg.json",
        &serde_json::json!({
            "function": {"kind": "FatouBaker"},
            "command": "profile",
            "output_dir": out,
            "profile": {"r_min": 1.0, "r_max": 50.0, "points_per_decade": 4}
        }),
    );
    let before: Vec<String> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    let res = run(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0));
    let mut after: Vec<String> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    after.retain(|n| n != "only-here");
    let mut expected = before;
    expected.sort();
    after.sort();
    assert_eq!(after, expected, "only the output directory may be created");
    assert!(out.join("profile.csv").exists());
    assert!(out.join("manifest.json").exists());
}
