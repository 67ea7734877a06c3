use raytrap_cli::run;
use serde_json::Value;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("raytrap").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(args: &[&str]) -> Value {
    let (code, out, err) = call(args);
    assert_eq!(code, 0, "{err}");
    serde_json::from_str(&out).unwrap()
}

#[test]
fn threshold_prints_the_four_dimensional_eps0() {
    let v = json(&["morawetz", "threshold", "--n", "4", "--k", "2"]);
    let eps0 = v["scalars"]["eps0"].as_f64().unwrap();
    assert!((eps0 - (1.0 + 3f64.sqrt()) / 4.0).abs() < 1e-15);
    assert_eq!(v["schema"], "raytrap.result/1");
    assert_eq!(v["config_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn orbit_reports_the_contraction() {
    let v = json(&["billiard", "orbit"]);
    let lam = v["scalars"]["lambda"].as_f64().unwrap();
    assert!((lam - (3.0 - 8f64.sqrt()).powi(4)).abs() / lam < 1e-4);
    assert!((lam - 8.6655e-4).abs() < 1e-7);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let (code, _, err) = call(&["billiard", "orbit", "--bogus"]);
    assert_eq!(code, 2);
    assert!(err.contains("Usage"));
    let (code, _, _) = call(&["frobnicate"]);
    assert_eq!(code, 2);
}

#[test]
fn help_documents_csv_columns() {
    let (code, out, _) = call(&["parametrix", "decay", "--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("combined_normalized"));
}

#[test]
fn compute_errors_exit_with_one() {
    let (code, _, err) = call(&["morawetz", "threshold", "--n", "2", "--k", "2"]);
    assert_eq!(code, 1, "{err}");
    let (code, _, _) = call(&["morawetz", "log-factor", "--T", "-1"]);
    assert_eq!(code, 1);
}

#[test]
fn nonpositive_tolerance_is_rejected() {
    let (code, _, err) = call(&["--tol", "c1.relative=0", "scene"]);
    assert_eq!(code, 2);
    assert!(err.contains("positive"));
}

#[test]
fn same_config_same_scalars() {
    let args = ["--seed", "3", "morawetz", "gauge", "--n", "3", "--k", "1", "--eps", "0.7", "--samples", "200"];
    let a = json(&args);
    let b = json(&args);
    assert_eq!(a["scalars"], b["scalars"]);
    assert_eq!(a["config_digest"], b["config_digest"]);
    let c = json(&["--seed", "4", "morawetz", "gauge", "--n", "3", "--k", "1", "--eps", "0.7", "--samples", "200"]);
    assert_ne!(a["config_digest"], c["config_digest"]);
}

#[test]
fn malformed_scene_file_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("scene.json");
    std::fs::write(&p, "{\n  \"bodies\": [],\n  \"cylinder_radius\": 0.5\n}\n").unwrap();
    let (code, _, err) = call(&["--scene", p.to_str().unwrap(), "scene"]);
    assert_eq!(code, 2);
    assert!(err.contains("scene.json:2:"), "{err}");
    std::fs::write(&p, "{\"bodies\": [{\"kind\": \"sphere\", \"center\": [0,0,0], \"radius\": 1, \"colour\": 1}], \"cylinder_radius\": 0.5}").unwrap();
    let (code, _, err) = call(&["--scene", p.to_str().unwrap(), "scene"]);
    assert_eq!(code, 2);
    assert!(err.contains("colour"), "{err}");
}

#[test]
fn scene_file_changes_the_geometry() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("wide.json");
    std::fs::write(
        &p,
        r#"{"bodies": [{"kind": "sphere", "center": [0,0,0], "radius": 1},
                       {"kind": "sphere", "center": [10,0,0], "radius": 1}],
            "cylinder_radius": 0.5}"#,
    )
    .unwrap();
    let v = json(&["--scene", p.to_str().unwrap(), "scene"]);
    assert!((v["scalars"]["gap"].as_f64().unwrap() - 8.0).abs() < 1e-12);
}

#[test]
fn output_directory_gets_json_and_csv_with_digest() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&["--out", dir.path().to_str().unwrap(), "billiard", "orbit"]);
    let digest = v["config_digest"].as_str().unwrap().to_string();
    let stored: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("billiard_orbit.json")).unwrap()).unwrap();
    assert_eq!(stored["config_digest"], digest.as_str());
    let csv = std::fs::read_to_string(dir.path().join("billiard_orbit_monodromy.csv")).unwrap();
    assert!(csv.contains(&digest) && csv.contains("0.1.0"));
    assert!(csv.lines().any(|l| l == "row,c0,c1,c2,c3"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 5);
}

#[test]
fn acceptance_subset_reports_per_criterion() {
    let (code, out, _) = call(&["acceptance", "--only", "1,11"]);
    assert_eq!(code, 0, "{out}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines.iter().all(|l| l.starts_with("PASS")));
    let (code, _, _) = call(&["acceptance", "--only", "12"]);
    assert_eq!(code, 2);
}

#[test]
fn phase_command_evaluates_a_story() {
    let v = json(&["phase", "--x", "2.1,0.05,0", "--xi", "1,0.02,0", "--story", "2,1"]);
    assert!(v["scalars"]["grad_norm_error"].as_f64().unwrap() < 1e-12);
    let (code, _, _) = call(&["phase", "--x", "2,0,0", "--xi", "1,0,0", "--story", "2,x"]);
    assert_eq!(code, 1);
}
