use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn pinchlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pinchlab"))
        .args(args)
        .env_remove("PINCHLAB_SEED")
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, contents: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, contents).unwrap();
    path.to_string_lossy().into_owned()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout));
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn clifford_input(n: usize, p: usize, r: f64, c: f64) -> String {
    let s = (1.0 - r * r).sqrt();
    let lam = -s / r;
    let mu = r / s;
    let diag: Vec<f64> = (0..n).map(|i| if i < p { lam } else { mu }).collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { diag[i] } else { 0.0 }).collect())
        .collect();
    serde_json::json!({ "n": n, "k": 1, "p": p, "c": c, "operators": [rows] }).to_string()
}

#[test]
fn check_reports_clifford_equality() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "torus.json", &clifford_input(4, 2, 0.5f64.sqrt(), 1.0));
    let out = pinchlab(&["--command", "check", "--input", &input]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    for key in ["rho_p_ext", "rho_p_full", "bound", "phi_p", "equality_certificate", "pinching_constants"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!(v["phi_p"].as_f64().unwrap().abs() < 1e-9);
    let cert = &v["equality_certificate"];
    assert_eq!(cert["equality_detected"], true);
    assert_eq!(cert["multiplicity_pair"], serde_json::json!([2, 2]));
    assert!(cert["product_check"].as_f64().unwrap().abs() < 1e-9);
    for key in ["tool", "version", "seed", "tolerances", "config"] {
        assert!(v["header"].get(key).is_some(), "header missing {key}");
    }
}

#[test]
fn check_zero_form_is_all_zero() {
    let dir = TempDir::new().unwrap();
    let zero = serde_json::json!({ "p": 1, "c": 1.0, "operators": [[[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]] });
    let input = write(&dir, "zero.json", &zero.to_string());
    let out = pinchlab(&["--command", "check", "--input", &input]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    for key in ["rho_p_ext", "bound", "phi_p"] {
        assert_eq!(v[key].as_f64().unwrap(), 0.0, "{key}");
    }
}

#[test]
fn check_rejects_bad_input() {
    let dir = TempDir::new().unwrap();
    let asym = serde_json::json!({ "p": 1, "c": 1.0, "operators": [[[0.0, 1.0], [2.0, 0.0]]] });
    let input = write(&dir, "asym.json", &asym.to_string());
    assert_eq!(code(&pinchlab(&["--command", "check", "--input", &input])), 2);

    let broken = write(&dir, "broken.json", "{\n  \"p\": 1,\n  \"c\": \n}");
    let out = pinchlab(&["--command", "check", "--input", &broken]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));

    let missing = dir.path().join("absent.json");
    assert_eq!(code(&pinchlab(&["--command", "check", "--input", missing.to_str().unwrap()])), 2);
    assert_eq!(code(&pinchlab(&["--command", "nonsense"])), 2);
}

#[test]
fn check_flags_hypothesis_violation() {
    let dir = TempDir::new().unwrap();
    let zero = serde_json::json!({ "p": 1, "c": -1.0, "operators": [[[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]] });
    let input = write(&dir, "hyp.json", &zero.to_string());
    assert_eq!(code(&pinchlab(&["--command", "check", "--input", &input])), 3);
}

#[test]
fn torus_scan_rows() {
    let out = pinchlab(&["--command", "torus-scan", "--n", "3", "--p", "1", "--r-grid", "0.5,0.7071067811865476,min"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# {"));
    assert_eq!(lines.next().unwrap(), "n,p,r,H,S,a,gap,branch");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    let gap = |row: &[&str]| row[6].parse::<f64>().unwrap();
    assert!((gap(&rows[0]) - 5.0 / 6.0).abs() < 1e-12);
    assert_eq!(rows[0][7], "strict_above");
    assert!(gap(&rows[1]).abs() < 1e-10);
    assert_eq!(rows[1][7], "equality");
    assert!(rows[2][3].parse::<f64>().unwrap().abs() < 1e-12);
    assert!((rows[2][4].parse::<f64>().unwrap() - 3.0).abs() < 1e-12);
}

#[test]
fn torus_scan_empty_grid_is_input_error() {
    assert_eq!(code(&pinchlab(&["--command", "torus-scan", "--r-grid", ""])), 2);
}

#[test]
fn verdict_exit_codes() {
    let dir = TempDir::new().unwrap();
    let sphere = write(
        &dir,
        "sphere.csv",
        "# {\"n\": 5, \"p\": 2, \"c\": 1.0, \"compact\": true, \"minimal\": true}\npoint_id,H,S\nx0,0,4.9\nx1,0,4.9\n",
    );
    let out = pinchlab(&["--command", "verdict", "--input", &sphere]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["verdict"]["status_summary"], "all_strict");
    assert_eq!(v["context_source"], "csv_preamble");
    let zeros = v["verdict"]["betti_bounds"].as_object().unwrap();
    for i in 2..=3 {
        assert_eq!(zeros[&i.to_string()], 0, "b_{i}");
    }

    let cartan = write(&dir, "cartan.csv", "point_id,H,S\ncartan,0,6\n");
    let out = pinchlab(&["--command", "verdict", "--input", &cartan, "--n", "3", "--p", "1", "--c", "1"]);
    assert_eq!(code(&out), 4);
    assert_eq!(json(&out)["verdict"]["status_summary"], "violated_somewhere");

    let empty = write(&dir, "empty.csv", "");
    assert_eq!(code(&pinchlab(&["--command", "verdict", "--input", &empty, "--n", "3", "--p", "1", "--c", "1"])), 2);
    let header_only = write(&dir, "header.csv", "point_id,H,S\n");
    assert_eq!(code(&pinchlab(&["--command", "verdict", "--input", &header_only, "--n", "3", "--p", "1", "--c", "1"])), 2);

    let below = write(&dir, "below.csv", "point_id,H,S\nbad_point,1,2\n");
    let out = pinchlab(&["--command", "verdict", "--input", &below, "--n", "3", "--p", "1", "--c", "1"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad_point"));
}

#[test]
fn epsilon_is_byte_identical_per_seed() {
    let dir = TempDir::new().unwrap();
    let args = |out: &str| {
        vec![
            "--command".to_string(), "epsilon".into(), "--n".into(), "4".into(), "--k".into(), "1".into(),
            "--p".into(), "1".into(), "--restarts".into(), "2".into(), "--samples".into(), "512".into(),
            "--seed".into(), "11".into(), "--output".into(), out.to_string(),
        ]
    };
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let owned = args(path.to_str().unwrap());
        let argv: Vec<&str> = owned.iter().map(String::as_str).collect();
        assert_eq!(code(&pinchlab(&argv)), 0);
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let v: Value = serde_json::from_slice(&ta).unwrap();
    assert!(v["estimate"]["best_value"].as_f64().unwrap() > 0.0);
    assert!(v["estimate"]["caveat"].as_str().is_some());
    assert!(v["best_beta"].is_array());
    assert!(no_temp_files(dir.path()));
}

fn no_temp_files(dir: &Path) -> bool {
    std::fs::read_dir(dir)
        .unwrap()
        .all(|e| !e.unwrap().file_name().to_string_lossy().ends_with(".tmp"))
}

#[test]
fn epsilon_precondition_and_search_errors() {
    assert_eq!(code(&pinchlab(&["--command", "epsilon", "--n", "4", "--k", "1", "--p", "1", "--restarts", "0"])), 2);
    // Λ_p is empty when n − 2p < 2
    assert_eq!(code(&pinchlab(&["--command", "epsilon", "--n", "5", "--k", "1", "--p", "2", "--restarts", "1", "--samples", "64"])), 5);
}

#[test]
fn seed_environment_overrides_flag() {
    let run = |env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_pinchlab"));
        cmd.args(["--command", "property-suite", "--samples", "2", "--seed", "1"]);
        match env {
            Some(v) => cmd.env("PINCHLAB_SEED", v),
            None => cmd.env_remove("PINCHLAB_SEED"),
        };
        cmd.output().unwrap()
    };
    let flag = run(None);
    assert_eq!(code(&flag), 0);
    assert_eq!(json(&flag)["header"]["seed"], 1);
    let env = run(Some("77"));
    assert_eq!(code(&env), 0);
    assert_eq!(json(&env)["header"]["seed"], 77);
    assert_eq!(code(&run(Some("not-a-number"))), 2);
}

#[test]
fn property_suite_passes() {
    let out = pinchlab(&["--command", "property-suite", "--samples", "30", "--seed", "3"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["all_passed"], true);
    assert_eq!(v["properties"].as_array().unwrap().len(), 8);
}
