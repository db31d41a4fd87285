use std::path::Path;
use std::process::Command;

fn osveta(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_osveta")).args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) {
    let out = osveta(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn fixture(dir: &Path, kind: &str, level: &str) -> String {
    let path = dir.join(format!("{kind}.obj")).to_string_lossy().into_owned();
    run_ok(&["fixture", kind, "--level", level, "--seed", "3", "--output", &path]);
    path
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn curvature_csv_has_one_row_per_vertex() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = fixture(dir.path(), "icosphere", "1");
    let out = dir.path().join("k.csv");
    run_ok(&["curvature", "--input", &mesh, "--out", out.to_str().unwrap()]);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("vertex_id,kG,kH,"));
    assert_eq!(text.lines().count(), 43);

    run_ok(&["curvature", "--input", &mesh, "--method", "quadric", "--fit", "simple", "--out", out.to_str().unwrap()]);
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("vertex_id,kGI,kHI,"));
}

#[test]
fn decimate_writes_mesh_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = fixture(dir.path(), "icosphere", "3");
    let report = dir.path().join("r.json");
    let output = dir.path().join("d.off");
    run_ok(&[
        "decimate",
        "--input",
        &mesh,
        "--target",
        "0.5",
        "--progressive",
        "--report",
        report.to_str().unwrap(),
        "--output",
        output.to_str().unwrap(),
    ]);
    let r = read_json(&report);
    assert_eq!(r["original_vertex_count"], 642);
    assert_eq!(r["survivors"].as_array().unwrap().len(), 321);
    assert!(std::fs::read_to_string(&output).unwrap().starts_with("OFF"));
}

#[test]
fn extract_and_evaluate_are_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = fixture(dir.path(), "spiked-icosphere", "3");
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let features = dir.path().join("f.csv");
    for out in [&a, &b] {
        run_ok(&[
            "extract",
            "--input",
            &mesh,
            "--top",
            "50",
            "--out",
            out.to_str().unwrap(),
            "--features",
            features.to_str().unwrap(),
        ]);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let v = read_json(&a);
    assert_eq!(v["p"].as_array().unwrap().len(), 50);
    assert_eq!(std::fs::read_to_string(&features).unwrap().lines().count(), 643);

    let eval = dir.path().join("e.json");
    let csv = dir.path().join("e.csv");
    let eff = dir.path().join("eff.json");
    let curve = dir.path().join("curve.csv");
    run_ok(&[
        "evaluate",
        "--input",
        &mesh,
        "--top",
        "100",
        "--schedule",
        "0.5,0.25",
        "--seeds",
        "3",
        "--out",
        eval.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
        "--efficiency",
        eff.to_str().unwrap(),
        "--rank-curve",
        curve.to_str().unwrap(),
    ]);
    let e = read_json(&eval);
    assert_eq!(e["schema"], 1);
    assert_eq!(e["levels"].as_array().unwrap().len(), 2);
    assert_eq!(read_json(&eff)["efficiency"]["rows"].as_array().unwrap().len(), 23);
    assert_eq!(std::fs::read_to_string(&curve).unwrap().lines().count(), 51);
}

#[test]
fn compare_areas_reports_both_modes() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = fixture(dir.path(), "bumpy-sphere", "3");
    let out = dir.path().join("c.json");
    run_ok(&["compare-areas", "--input", &mesh, "--out", out.to_str().unwrap()]);
    assert_eq!(read_json(&out)["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn bad_input_fails_cleanly() {
    let out = osveta(&["extract", "--input", "/nonexistent.obj", "--out", "/tmp/x.json"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
}
