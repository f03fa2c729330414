use std::fs;
use std::process::{Command, Output};

fn qfi_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfi-lab")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(qfi_lab(&["figure", "fig1a", "--config", missing.to_str().unwrap()]).status.code(), Some(2));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\n  \"rabi\": 1.0,\n  \"steps\": oops\n}\n").unwrap();
    let o = qfi_lab(&["figure", "fig1a", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    assert_eq!(qfi_lab(&["figure", "fig7"]).status.code(), Some(3));
    assert_eq!(qfi_lab(&["frobnicate"]).status.code(), Some(3));
    let three = ["sweep", "--metric", "total-fi", "--axis", "tau=1:2:3", "--axis", "time=10:20:3", "--axis", "rabi=1:2:2"];
    assert_eq!(qfi_lab(&three).status.code(), Some(3));
    assert_eq!(qfi_lab(&["sweep", "--metric", "total-fi", "--axis", "tau=1:2:0"]).status.code(), Some(3));
    assert_eq!(qfi_lab(&["simulate", "--time=-1"]).status.code(), Some(1));
}

#[test]
fn figure_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = qfi_lab(&["figure", "fig1a", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("fig1a.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,series,fi"));
    assert!(csv.lines().count() > 100);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fig1a.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["scenario"], "fig1a");
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs[0]["file"], "fig1a.csv");
    assert!(!outputs[0]["series"].as_array().unwrap().is_empty());
}

#[test]
fn config_scenario_must_match() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"scenario": "fig3"}"#).unwrap();
    let o = qfi_lab(&["figure", "fig4", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_emits_long_format_grid() {
    let o = qfi_lab(&["sweep", "--metric", "oscillation-amplitude", "--axis", "divisor=1.8:2.2:5", "--threads", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(text.lines().next(), Some("divisor,oscillation_amplitude"));
    assert_eq!(rows.len(), 5);
    let peak = rows.iter().max_by(|a, b| a[1].total_cmp(&b[1])).unwrap();
    assert!((peak[0] - 2.0).abs() < 1e-12);

    let o = qfi_lab(&["sweep", "--metric", "no-control-fi", "--axis", "tau=0.5:2:4", "--axis", "frequency=0:1:3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 1 + 12);
}

#[test]
fn simulate_dumps_unitary_rows() {
    let args = ["simulate", "--control", "method2", "--frequency", "0.001", "--time", "20", "--samples", "11"];
    let o = qfi_lab(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("t,u00_re,u00_im"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 11);
    for r in &rows {
        assert_eq!(r.len(), 11);
        let norm: f64 = r[1..9].iter().map(|x| x * x).sum();
        assert!((norm - 2.0).abs() < 1e-9);
        assert!((0.0..=1.0).contains(&r[9]));
    }
    assert!((rows[10][0] - 20.0).abs() < 1e-12);
    assert!(rows[0][9] < 1e-4);
}
