use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn skewimpute(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skewimpute"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .unwrap_or_else(|| panic!("no {key} in\n{text}"))
}

#[test]
fn forward_moments() {
    let o = skewimpute(&["moments", "--mu", "1", "--sigma", "1", "--c", "0"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let get = |k| value(&s, k).parse::<f64>().unwrap();
    assert!((get("censored.mean") - 1.0833).abs() < 5e-5);
    assert!((get("censored.variance") - 0.7511).abs() < 5e-5);
    assert!((get("truncated.mean") - 1.2876).abs() < 5e-5);
    assert!((get("truncated.variance") - 0.6297).abs() < 5e-5);
}

#[test]
fn inverse_moments_report_infeasible_truncation() {
    let o = skewimpute(&["moments", "--target-mean", "1", "--target-var", "1"]);
    assert!(!o.status.success());
    let s = stdout(&o);
    assert!((value(&s, "censored.pre_mean").parse::<f64>().unwrap() - 0.785).abs() < 5e-4);
    assert!((value(&s, "censored.pre_sd").parse::<f64>().unwrap() - 1.29).abs() < 5e-3);
    assert!(s.contains("truncated.error="));

    let o = skewimpute(&["moments", "--target-mean", "1", "--target-var", "1", "--kind", "censor"]);
    assert!(o.status.success());
}

#[test]
fn moments_needs_a_mode() {
    assert!(!skewimpute(&["moments"]).status.success());
}

fn simulate(out: &Path, workers: &str) -> Output {
    skewimpute(&[
        "simulate",
        "--nu",
        "1,4",
        "--r2",
        "0.3",
        "--pattern",
        "tail",
        "--method",
        "control,linear_truncated,transform_all",
        "--reps",
        "6",
        "--seed",
        "11",
        "--workers",
        workers,
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn simulate_writes_tables_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = simulate(&a, "1");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(simulate(&b, "3").status.success());

    let cells = fs::read_to_string(a.join("cells.csv")).unwrap();
    assert_eq!(cells, fs::read_to_string(b.join("cells.csv")).unwrap());
    // 6 cells × 7 estimands
    assert_eq!(cells.lines().count(), 1 + 6 * 7);
    assert!(fs::read_to_string(a.join("summary.csv")).unwrap().starts_with("grouping,"));

    let manifest = fs::read_to_string(a.join("manifest.txt")).unwrap();
    assert_eq!(value(&manifest, "command"), "simulate");
    assert_eq!(value(&manifest, "cells"), "6");
    assert_eq!(value(&manifest, "seed"), "11");
    assert_eq!(value(&manifest, "method"), "control,linear_truncated,transform_all");
    assert_eq!(value(&manifest, "invariant_violations"), "0");
}

#[test]
fn summarize_by_factor_and_exclude() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    assert!(simulate(&run, "2").status.success());
    let input = run.join("cells.csv");
    let o = skewimpute(&["summarize", "--input", input.to_str().unwrap(), "--by", "nu", "--exclude", "control"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(run.join("summary_nu.csv")).unwrap();
    // 2 methods × 2 levels × 7 estimands
    assert_eq!(table.lines().count(), 1 + 28);
    assert!(!table.contains(",control,"));
    assert!(table.lines().skip(1).all(|l| l.starts_with("nu,bivariate,")));
}

#[test]
fn tampered_table_exits_with_invariant_status() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    assert!(simulate(&run, "1").status.success());
    let path = run.join("cells.csv");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    // Column 14 is rmse; zeroing it breaks rmse ≥ |bias|.
    let mut fields: Vec<&str> = lines[1].split(',').collect();
    fields[14] = "0";
    lines[1] = fields.join(",");
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    let o = skewimpute(&["summarize", "--input", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("invariant violated"));
}

#[test]
fn bad_arguments_fail() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert!(!skewimpute(&["simulate", "--method", "bogus", "--out", out]).status.success());
    assert!(!skewimpute(&["simulate", "--reps", "0", "--out", out]).status.success());
    assert!(!skewimpute(&["simulate", "--design", "quadrivariate", "--out", out]).status.success());
    assert!(!skewimpute(&["summarize", "--input", "/nonexistent/cells.csv"]).status.success());
}

#[test]
fn demo_writes_one_pair_of_tables_per_method() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = skewimpute(&["demo", "--method", "fn,sqrt_transform", "--n", "4000", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["fn", "sqrt_transform"] {
        let moments = fs::read_to_string(dir.path().join(format!("{name}_moments.csv"))).unwrap();
        assert_eq!(moments.lines().count(), 4);
        let grid = fs::read_to_string(dir.path().join(format!("{name}_grid.csv"))).unwrap();
        assert_eq!(grid.lines().count(), 1 + 111);
    }
    assert!(!dir.path().join("censor_naive_grid.csv").exists());
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert_eq!(value(&manifest, "fn.status"), "ok");
    assert!(!skewimpute(&["demo", "--method", "nope", "--out", out]).status.success());
}
