use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cls"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

/// Path graph on `lengths.len() + 1` unit-weight points.
fn write_path_space(path: &Path, lengths: &[f64]) {
    let points: Vec<_> = (0..=lengths.len())
        .map(|i| serde_json::json!({"id": i, "weight": 1.0}))
        .collect();
    let edges: Vec<_> = lengths
        .iter()
        .enumerate()
        .map(|(i, l)| serde_json::json!({"a": i, "b": i + 1, "length": l}))
        .collect();
    let doc = serde_json::json!({
        "schema": "cls-space-1",
        "points": points,
        "edges": edges,
        "basepoint": 0,
        "mesh_fill_radius": 0.5,
    });
    fs::write(path, doc.to_string()).unwrap();
}

#[test]
fn generate_then_analyze_and_graph() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = cls(&["generate", "--family", "cr-cusp", "--k", "1", "--out", d]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = stdout_json(&out);
    let mass = summary["mass"].as_f64().unwrap();
    let area = summary["analytic_area"].as_f64().unwrap();
    assert!((mass - area).abs() < 0.01 * area);

    let space = dir.path().join("member-1.json");
    let space = space.to_str().unwrap();
    let out = cls(&["analyze", "--space", space, "--eps-grid", "0.05,0.2"]);
    assert!(out.status.success());
    let report = stdout_json(&out);
    let regular = report["regular"].as_array().unwrap();
    assert_eq!(regular.len(), 2);
    assert!(regular[0]["regular"].as_u64() >= regular[1]["regular"].as_u64());

    let graph_path = dir.path().join("graph.json");
    let out = cls(&[
        "graph",
        "--space",
        space,
        "--eps",
        "0.05",
        "--out",
        graph_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(graph_path).unwrap()).unwrap();
    assert_eq!(doc["schema"], "cls-graph-1");
    assert_eq!(doc["vertices"].as_array().unwrap().len(), 3);
    assert_eq!(doc["edges"].as_array().unwrap().len(), 2);
}

#[test]
fn gh_exact_on_two_point_spaces() {
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.json");
    let y = dir.path().join("y.json");
    write_path_space(&x, &[1.0]);
    write_path_space(&y, &[3.0]);
    let out = cls(&["gh", "--x", x.to_str().unwrap(), "--y", y.to_str().unwrap(), "--mode", "exact"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    assert_eq!(report["schema"], "cls-gh-1");
    assert_eq!(report["upper"].as_f64(), Some(1.0));
    assert_eq!(report["lower"].as_f64(), Some(1.0));

    let out = cls(&["gh", "--x", x.to_str().unwrap(), "--y", y.to_str().unwrap(), "--mode", "upper"]);
    assert!(out.status.success());
    assert!(stdout_json(&out)["upper"].as_f64().unwrap() >= 1.0);

    let out = cls(&[
        "gh", "--x", x.to_str().unwrap(), "--y", y.to_str().unwrap(), "--mode", "exact", "--pointed", "0.5",
    ]);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["upper"].as_f64(), Some(0.0));
}

#[test]
fn exact_gh_over_cap_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.json");
    write_path_space(&x, &[1.0; 11]);
    let out = cls(&["gh", "--x", x.to_str().unwrap(), "--y", x.to_str().unwrap(), "--mode", "exact"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validation_failures_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(cls(&["generate", "--family", "nope", "--k", "1", "--out", d]).status.code(), Some(2));
    assert_eq!(cls(&["generate", "--family", "cr-cusp", "--k", "9", "--out", d]).status.code(), Some(2));
    assert_eq!(cls(&["analyze", "--space", "/no/such/file.json", "--eps-grid", "0.1"]).status.code(), Some(2));
    assert_eq!(cls(&["run"]).status.code(), Some(2));
    assert_eq!(cls(&["run", "--preset", "nope"]).status.code(), Some(2));

    let cfg = dir.path().join("exp.json");
    let mut exp = serde_json::to_value(
        cls_core::harness::ExperimentConfig::preset("cr-cusp", dir.path().join("out")).unwrap(),
    )
    .unwrap();
    exp["family"]["schedule"] = serde_json::json!([]);
    fs::write(&cfg, exp.to_string()).unwrap();
    assert_eq!(cls(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn unwritable_output_is_an_internal_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = blocker.join("sub");
    let code = cls(&["generate", "--family", "cr-cusp", "--k", "1", "--out", out.to_str().unwrap()])
        .status
        .code();
    assert_eq!(code, Some(3));
}

#[test]
fn run_preset_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = cls(&["run", "--preset", "cr-cusp", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["convergence_pass"], true);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["complete"], true);
    assert!(out_dir.join("summary.csv").is_file());
}
