use std::path::{Path, PathBuf};
use std::process::Command;

use spectral_lab::report::{read_csv, read_json_rows, OracleRow, VolumeRow, WeylRow};

fn models() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_spectral-lab")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn model(name: &str) -> String {
    models().join(name).to_string_lossy().into_owned()
}

#[test]
fn flat_sweep_certifies() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let m = model("euclidean3.json");
    let (code, _, err) = run(&[
        "sweep", "--model", &m, "--lambda", "0,0.5,1,2", "--p", "1", "--eps", "0.05", "--mu", "10", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let rows: Vec<WeylRow> = read_csv(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.certified && r.quotient.unwrap() < 0.05));
    assert!(dir.path().join("sweep.csv.summary.json").exists());
}

#[test]
fn cusp_growth_is_expected_negative() {
    let (code, stdout, _) = run(&["volume", "--model", &model("cusp.json"), "--check", "growth", "--eps", "0.1", "--format", "json"]);
    assert_eq!(code, 2);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["summary"]["verdict"], "violated");
}

#[test]
fn oracle_fill_in_verdict() {
    let (code, stdout, _) = run(&["oracle", "--model", &model("euclidean3.json"), "--cap", "4", "--L", "50,100,200", "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["summary"]["verdict"]["fills"], true);
    let rows: Vec<OracleRow> = read_json_rows(stdout.as_bytes()).unwrap();
    assert!(rows.iter().any(|r| r.l == 200.0));
}

#[test]
fn malformed_model_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"kind\": \"euclidean\",\n \"n\": 3,\n \"r_max\": 10,\n \"colour\": 1}").unwrap();
    let (code, _, err) = run(&["model", "--model", path.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("line 4") && err.contains("colour"), "{err}");

    std::fs::write(&path, r#"{"kind": "hyperbolic", "n": 1, "r_max": 10}"#).unwrap();
    let (code, _, err) = run(&["model", "--model", path.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("`n`"), "{err}");
}

#[test]
fn precondition_violations_exit_one() {
    let m = model("euclidean3.json");
    assert_eq!(run(&["sweep", "--model", &m, "--lambda", "1", "--p", "3"]).0, 1);
    assert_eq!(run(&["sweep", "--model", &m, "--lambda", "-1"]).0, 1);
    assert_eq!(run(&["oracle", "--model", &m, "--L", "100,50"]).0, 1);
    assert_eq!(run(&["oracle", "--model", &m, "--N", "8"]).0, 1);
    assert_eq!(run(&["weyl", "--model", &m, "--lambda", "1", "--params", "3,5,9"]).0, 1);
    assert_eq!(run(&["volume", "--model", &m, "--check", "lemma3"]).0, 1);
    assert_eq!(run(&["sweep", "--model", &m, "--lambda", "1", "--unknown"]).0, 1);
}

#[test]
fn seeded_runs_are_byte_identical() {
    let m = model("gaussian3.json");
    let a = run(&["--seed", "42", "volume", "--model", &m, "--check", "lemma3"]);
    let b = run(&["--seed", "42", "volume", "--model", &m, "--check", "lemma3"]);
    let c = run(&["--seed", "43", "volume", "--model", &m, "--check", "lemma3"]);
    assert_eq!(a.0, 0);
    assert_eq!(a.1, b.1);
    assert_ne!(a.1, c.1);
    let rows: Vec<VolumeRow> = read_csv(a.1.as_bytes()).unwrap();
    assert_eq!(rows.len(), 200);
}

#[test]
fn csv_rows_round_trip_through_json() {
    let m = model("gaussian3.json");
    let args = ["sweep", "--model", m.as_str(), "--lambda", "0,1", "--p", "1", "--threads", "2"];
    let (code, csv_out, _) = run(&args);
    assert_eq!(code, 0);
    let mut json_args = args.to_vec();
    json_args.extend(["--format", "json"]);
    let (_, json_out, _) = run(&json_args);
    let from_csv: Vec<WeylRow> = read_csv(csv_out.as_bytes()).unwrap();
    let from_json: Vec<WeylRow> = read_json_rows(json_out.as_bytes()).unwrap();
    assert_eq!(from_csv, from_json);
    let mut again = vec![];
    spectral_lab::report::write_csv(&from_json, &mut again).unwrap();
    assert_eq!(String::from_utf8(again).unwrap(), csv_out);
}

#[test]
fn remaining_subcommands() {
    let (code, out, _) = run(&["ode", "--delta", "inv:1,1,2", "--r-max", "1000"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("r,u,g_log\n"));
    assert_eq!(run(&["ode", "--model", &model("hyperbolic3.json")]).0, 2);

    let (code, out, _) = run(&["smooth", "--model", &model("glued-cone3.json"), "--points", "500"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("r,rho_tilde,d_rho_tilde,laplacian_rho_tilde,bound_a_margin,bound_b_margin\n"));

    let (code, out, _) = run(&["weyl", "--model", &model("euclidean3.json"), "--lambda", "1", "--p", "1", "--params", "13,27,60", "--eps", "0.5"]);
    assert_eq!(code, 0);
    let rows: Vec<WeylRow> = read_csv(out.as_bytes()).unwrap();
    assert_eq!((rows[0].r_or_l, rows[0].x_or_b, rows[0].y_or_a), (Some(13.0), Some(27.0), Some(60.0)));

    let (code, out, _) = run(&["model", "--model", &model("cylinder4.json"), "--points", "10", "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["summary"]["total_volume"], "infinite");

    assert_eq!(run(&["volume", "--model", &model("cylinder4.json"), "--check", "soliton-id"]).0, 0);
    assert_eq!(run(&["volume", "--model", &model("euclidean3.json"), "--check", "growth"]).0, 0);
    assert_eq!(run(&["volume", "--model", &model("hyperbolic3.json"), "--check", "growth"]).0, 2);
}
