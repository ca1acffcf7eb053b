use std::path::Path;

use isocurv::cli::run;
use serde_json::Value;

const SPHERE_CYLINDER: &str = "cylinder(c=1,n=2,geodesic-sphere(r=0.7))";

fn isocurv(args: &[&str]) -> i32 {
    run(std::iter::once("isocurv").chain(args.iter().copied()))
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn passing_analysis_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let code = isocurv(&[
        "analyze",
        "--entry",
        "slice(c=1,n=2,t0=0.3)",
        "--format",
        "structured",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["summary"], "pass");
    assert!(v["checks"].as_object().is_some_and(|m| !m.is_empty()));
}

#[test]
fn failed_tolerance_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.txt");
    let code = isocurv(&[
        "parallel",
        "--entry",
        "rotational-horosphere(B=1,n=2)",
        "--t-range",
        "-0.5:0.5:5",
        "--tol",
        "metric=1e-300",
        "--tol",
        "transport=1e-300",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
}

#[test]
fn configuration_errors_exit_two() {
    assert_eq!(isocurv(&["analyze", "--entry", "no-such-surface"]), 2);
    assert_eq!(isocurv(&["analyze", "--grid", "1"]), 2);
    assert_eq!(isocurv(&["analyze", "--tol", "curvature"]), 2);
    assert_eq!(isocurv(&["analyze", "--tol", "bogus=1e-3"]), 2);
    assert_eq!(isocurv(&["wobble"]), 2);
    assert_eq!(isocurv(&["analyze", "--config", "/nonexistent/run.toml"]), 2);

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "grid = \"4\"\nunknown_key = 1\n").unwrap();
    assert_eq!(isocurv(&["analyze", "--config", cfg.to_str().unwrap()]), 2);
}

#[test]
fn focal_range_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let code = isocurv(&[
        "parallel",
        "--entry",
        SPHERE_CYLINDER,
        "--t-range",
        "-2:2:9",
        "--format",
        "structured",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 3);
    assert_eq!(json(&out)["summary"], "error");
}

#[test]
fn parallel_writes_csv_curves() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("curves.csv");
    let out = dir.path().join("report.txt");
    let code = isocurv(&[
        "parallel",
        "--entry",
        SPHERE_CYLINDER,
        "--t-range",
        "-0.5:0.5:11",
        "--csv",
        csv.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,lambda_index,predicted,measured"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect();
    assert!(rows.len() >= 11);
    for r in &rows {
        assert_eq!(r.len(), 4);
        assert!((r[2] - r[3]).abs() <= 1e-6 * r[2].abs().max(1.0), "{r:?}");
    }
}

#[test]
fn toml_config_is_merged_with_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out = dir.path().join("report.json");
    std::fs::write(
        &cfg,
        r#"
grid = "4"
format = "text"

[chart]
kind = "rotational"
n = 2

[chart.profile]
kind = "closed_form"
c1 = 0.8
c2 = 0.3
c3 = 0.0
"#,
    )
    .unwrap();
    let code = isocurv(&[
        "ode",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "structured",
        "--out",
        out.to_str().unwrap(),
    ]);
    let v = json(&out);
    assert_eq!(code, 0, "{v:#}");
    assert_eq!(v["summary"], "pass");
}

#[test]
fn text_report_lists_each_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.txt");
    let code = isocurv(&["frame", "--entry", SPHERE_CYLINDER, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("frame"));
    assert!(text.lines().count() > 3);
}
