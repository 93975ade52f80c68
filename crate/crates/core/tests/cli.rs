mod common;

use std::process::Command;

use common::{cli, parse_csv, spec_path};
use serde_json::Value;

fn write_spec(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn s1() -> String {
    spec_path("setting1.json").to_str().unwrap().to_string()
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_fhbounds");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code().unwrap();
    assert_eq!(status(&["bounds", &s1()]), 0);
    assert_eq!(status(&["detect", &s1(), "--point", "0.7,0.5,0.1"]), 3);
    assert_eq!(status(&["bounds", "/nonexistent/spec.json"]), 2);
    assert_eq!(status(&["no-such-command"]), 2);
}

#[test]
fn bounds_json_and_text() {
    let (code, out, _) = cli(&["bounds", &s1(), "--json"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    let d = v["derivatives"].as_array().unwrap();
    assert_eq!(d.len(), 2);
    assert_eq!(d[0]["kind"], "min_call");
    assert!((d[0]["upper"].as_f64().unwrap() - 3.864).abs() < 0.01);
    let (_, text, _) = cli(&["bounds", &s1()]);
    assert!(text.starts_with("0 min_call K=3: [0.118"), "{text}");
}

#[test]
fn empty_derivative_list_is_an_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_spec(
        &dir,
        "empty.json",
        r#"{"assets": [{"type": "lognormal", "s0": 1, "sigma": 0.2}, {"type": "lognormal", "s0": 2, "sigma": 0.3}], "derivatives": []}"#,
    );
    let (code, out, _) = cli(&["bounds", &path, "--json"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["derivatives"].as_array().unwrap().is_empty());
}

#[test]
fn parse_and_validation_errors_exit_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let broken = write_spec(&dir, "broken.json", "{\n  \"assets\": [\n    {\"type\": \"lognormal\", \"s0\": 8,}\n  ]\n}");
    let (code, _, err) = cli(&["bounds", &broken]);
    assert_eq!(code, 2);
    assert!(err.contains("line 3"), "{err}");

    let text = std::fs::read_to_string(spec_path("setting1.json")).unwrap();
    let bad = write_spec(&dir, "bad.json", &text.replace("\"strike\": 8", "\"strike\": -8"));
    let (code, _, err) = cli(&["bounds", &bad]);
    assert_eq!(code, 2);
    assert!(err.contains("derivatives[1].strike"), "{err}");

    let no_prices = write_spec(&dir, "noprices.json", &text.replace(",\n  \"prices\": [3.5, 6]", ""));
    let (code, _, err) = cli(&["detect", &no_prices]);
    assert_eq!(code, 2);
    assert!(err.contains("prices"), "{err}");
}

#[test]
fn detect_point_reports_the_witness_value() {
    let (code, out, _) = cli(&["detect", &s1(), "--point", "0.7,0.5,0.1", "--json"]);
    assert_eq!(code, 3);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!((v["value"].as_f64().unwrap() + 0.0952).abs() < 5e-3);
    assert_eq!(v["verdict"], "arbitrage");
    let (code, _, _) = cli(&["detect", &s1(), "--point", "0.7,0.5"]);
    assert_eq!(code, 2);
}

#[test]
fn detect_writes_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("report.json");
    let (code, text, _) = cli(&["detect", &s1(), "--grid", "7", "--refine", "--out", out_path.to_str().unwrap()]);
    assert_eq!(code, 3);
    assert!(text.contains("verdict: arbitrage"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["grid_n"], 7);
    assert!(v["refinement_iterations"].as_u64().unwrap() > 0);
    assert_eq!(v["witness"].as_array().unwrap().len(), 3);
}

#[test]
fn infeasible_price_names_the_derivative() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(spec_path("setting1.json")).unwrap();
    let path = write_spec(&dir, "over.json", &text.replace("[3.5, 6]", "[3.5, 7]"));
    let (code, out, _) = cli(&["detect", &path]);
    assert_eq!(code, 3);
    assert!(out.contains("derivative 1 is priced outside"), "{out}");
}

#[test]
fn sweep_rows_and_errors() {
    let (code, csv, _) = cli(&["sweep", &s1(), "--derivative", "0", "--strikes", "2:4:0.5"]);
    assert_eq!(code, 0);
    assert!(csv.starts_with("strike,lower,upper\n"));
    let rows = parse_csv(&csv);
    assert_eq!(rows.iter().map(|r| r[0]).collect::<Vec<_>>(), vec![2.0, 2.5, 3.0, 3.5, 4.0]);
    assert!((rows[2][1] - 0.118).abs() < 0.01 && (rows[2][2] - 3.864).abs() < 0.01);

    for bad in ["1:2:0", "1:2:-1", "3:1:1", "1:2"] {
        let (code, _, _) = cli(&["sweep", &s1(), "--derivative", "0", "--strikes", bad]);
        assert_eq!(code, 2, "{bad}");
    }
    let (code, _, _) = cli(&["sweep", &s1(), "--derivative", "5", "--strikes", "1:2:1"]);
    assert_eq!(code, 2);
}

#[test]
fn outputs_are_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let (code, _, _) = cli(&["sweep", &s1(), "--derivative", "1", "--strikes", "0:12:1", "--out", p.to_str().unwrap()]);
        assert_eq!(code, 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let first = cli(&["detect", &s1(), "--grid", "5", "--refine", "--json"]);
    let second = cli(&["detect", &s1(), "--grid", "5", "--refine", "--json"]);
    assert_eq!(first, second);
}

#[test]
fn check_passes_on_bundled_specs() {
    for spec in ["setting1.json", "setting2.json"] {
        let path = spec_path(spec);
        let (code, out, _) = cli(&["check", path.to_str().unwrap(), "--samples", "200000", "--seed", "3"]);
        assert_eq!(code, 0, "{spec}: {out}");
        assert!(!out.contains("FAIL"));
    }
}

#[test]
fn check_fails_without_martingale_drift() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_spec(
        &dir,
        "nodrift.json",
        r#"{"assets": [
            {"type": "nig", "s0": 100, "alpha": 2.0, "beta": 1.5, "delta": 0.5},
            {"type": "lognormal", "s0": 10, "sigma": 1.0}
        ]}"#,
    );
    let (code, _, err) = cli(&["check", &path]);
    assert_eq!(code, 1);
    assert!(err.contains("no martingale drift exists"), "{err}");
}
