use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn carnot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carnot")).args(args).output().expect("run carnot")
}

fn path(name: &str) -> String {
    data(name).to_string_lossy().into_owned()
}

fn json(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

#[test]
fn fiber_horizontal_point() {
    let v = json(&carnot(&["fiber", &path("h3.json"), &path("h3_horizontal.json")]));
    assert_eq!(v["nu_hat"], 1);
    assert_eq!(v["beta_hat"], 1);
    assert_eq!(v["isolated"][0]["lambda"], 0.0);
    assert_eq!(v["isolated"][0]["covector"]["blocks"][0][0], 1.0);
}

#[test]
fn fiber_vertical_point_is_infinite() {
    let v = json(&carnot(&["fiber", &path("h3.json"), &path("h3_vertical.json")]));
    assert_eq!(v["nu_hat"], "inf");
    assert_eq!(v["beta_hat"], "inf");
    assert_eq!(v["infinite_families"], true);
    let fam = &v["families"][0];
    assert_eq!(fam["L"], serde_json::json!([0]));
    assert_eq!(fam["sphere_dim"], 1);
}

#[test]
fn fiber_verify_passes() {
    let out = carnot(&["--verify", "fiber", &path("h3.json"), &path("h3_ratio2.json")]);
    assert_eq!(json(&out)["nu_hat"], 5);
}

#[test]
fn fiber_csv_lists_geodesics() {
    let out = carnot(&["fiber", "--csv", &path("h3.json"), &path("h3_ratio2.json")]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("kind,lambda,energy,sphere_dim"));
    assert_eq!(lines.filter(|l| l.starts_with("isolated,")).count(), 5);
}

#[test]
fn input_errors_exit_2() {
    for args in [
        vec!["fiber".to_string(), path("h3.json"), path("malformed.json")],
        vec!["fiber".to_string(), path("h3.json"), path("bad_layout.json")],
        vec!["fiber".to_string(), path("h3.json"), path("missing.json")],
        vec![
            "scan".to_string(),
            path("h3.json"),
            "--ratio-max".into(),
            "1".into(),
            "--steps".into(),
            "1".into(),
        ],
        vec![
            "scan".to_string(),
            path("h3.json"),
            "--ratio-min".into(),
            "2".into(),
            "--ratio-max".into(),
            "1".into(),
        ],
        vec!["nilpotentize".to_string(), path("degenerate_frame.json")],
        vec!["bogus".to_string()],
    ] {
        let out = carnot(&args.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn scan_staircase() {
    let out = carnot(&["scan", &path("h3.json"), "--ratio-min", "0", "--ratio-max", "3", "--steps", "301"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("ratio,nu_hat,beta_hat,lower,upper"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 301);
    assert_eq!(rows[0], vec![0.0, 1.0, 1.0, 0.0, 1.0]);
    let jumps: Vec<(f64, f64, f64)> =
        rows.windows(2).filter(|w| w[0][1] != w[1][1]).map(|w| (w[0][0], w[1][0], w[1][1])).collect();
    // Jumps at μ_k / 8: 1.12335… and 1.93130…
    assert_eq!(jumps[0].2, 3.0);
    assert!(jumps[0].0 < 1.12335 && 1.12335 < jumps[0].1);
    assert_eq!(jumps[1].2, 5.0);
    assert!(jumps[1].0 < 1.9313 && 1.9313 < jumps[1].1);
    let slope = 8.0 / std::f64::consts::PI;
    for r in &rows {
        assert!((r[3] - (slope * r[0] - 2.0).max(0.0)).abs() < 1e-12);
        assert!((r[4] - (slope * r[0] + 1.0)).abs() < 1e-12);
        assert!(r[3] <= r[1] && r[1] <= r[4]);
    }
}

#[test]
fn scan_json_and_determinism() {
    let args = ["scan", "--json", &path("resonant.json"), "--ratio-max", "5", "--steps", "11"];
    let a = carnot(&args);
    let b = carnot(&args);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v.as_array().unwrap().len(), 11);
    assert_eq!(v[10]["ratio"], 5.0);
}

#[test]
fn bounds_in_uniqueness_zone() {
    let v = json(&carnot(&["bounds", &path("h3.json"), &path("h3_unique.json")]));
    assert_eq!(v["nu_hat"], 1);
    for key in ["lower_ok", "upper_ok", "lower_top_ok", "upper_top_ok"] {
        assert_eq!(v[key], true, "{key}");
    }
    assert_eq!(v["C1"], 8.0 / std::f64::consts::PI);
}

#[test]
fn bounds_at_vertical_point_are_not_applicable() {
    let v = json(&carnot(&["bounds", &path("h3.json"), &path("h3_vertical.json")]));
    assert_eq!(v["ratio"], Value::Null);
    assert_eq!(v["lower_ok"], "not-applicable");
}

#[test]
fn families_of_vertical_point() {
    let v = json(&carnot(&["families", "--lambda-max", "100", &path("h3.json"), &path("h3_vertical.json")]));
    let fams = v.as_array().unwrap();
    assert_eq!(fams.len(), 15);
    for (m, f) in fams.iter().enumerate() {
        let l = f["lambda"].as_f64().unwrap();
        assert!((l - 2.0 * std::f64::consts::PI * (m + 1) as f64).abs() < 1e-9);
        assert_eq!(f["ell"], 1);
        assert_eq!(f["cell"], "S^0_{>=0}");
    }
}

#[test]
fn families_of_resonant_point() {
    let out = carnot(&[
        "families",
        "--csv",
        "--lambda-max",
        "13",
        &path("resonant.json"),
        &path("resonant_vertical.json"),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("lambda,ell,cell\n"));
    assert!(text.lines().any(|l| l.ends_with(",2,S^1_{>=0}")));
}

#[test]
fn nilpotentize_heisenberg_frame() {
    let v = json(&carnot(&["nilpotentize", &path("heisenberg5_frame.json")]));
    assert_eq!(v["spec"], serde_json::json!({"alphas": [1.0], "mults": [2]}));
    assert_eq!(v["skewness_defect"], 0.0);
    assert_eq!(v["adapted_to_exp"]["c"], 1.0);
    assert_eq!(v["A"][0][2], 1.0);
}

#[test]
fn nilpotentize_generated_frame() {
    let frame = serde_json::json!({
        "dim": 3,
        "fields": [
            [{"coord": 0, "monomial": [0, 0, 0], "value": 1.0}, {"coord": 2, "monomial": [0, 1, 0], "value": -1.5}],
            [{"coord": 1, "monomial": [0, 0, 0], "value": 1.0}, {"coord": 2, "monomial": [1, 0, 0], "value": 1.5}]
        ],
        "f0": [{"coord": 2, "monomial": [0, 0, 0], "value": 1.0}],
        "base_point": [0.0, 0.0, 0.0]
    });
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("frame.json");
    std::fs::write(&file, frame.to_string()).unwrap();
    let v = json(&carnot(&["nilpotentize", file.to_str().unwrap()]));
    let alpha = v["spec"]["alphas"][0].as_f64().unwrap();
    assert!((alpha - 3.0).abs() < 1e-12);
}
