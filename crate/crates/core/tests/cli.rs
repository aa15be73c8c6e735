use std::path::Path;
use std::process::{Command, Output};

use uconvex::io::{curve_from_csv, sequence_to_csv, CURVE_HEADER};
use uconvex::modulus::CurveSpace;
use uconvex::Vector;

fn uconvex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uconvex"))
        .args(args)
        .env_remove("UCONVEX_SEED")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn modulus_clarkson_grid() {
    let o = uconvex(&["modulus", "--p", "2", "--method", "clarkson", "--eps", "0.1:2.0:20"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 21);
    assert_eq!(text.lines().next(), Some(CURVE_HEADER));
    let c = curve_from_csv(&text, CurveSpace { p: 2.0, dim: None }).unwrap();
    assert!((c.points()[9].delta - 0.133_974_596_215_561_35).abs() < 1e-15);
}

#[test]
fn modulus_hanner_single_point() {
    let o = uconvex(&["modulus", "--p", "1.5", "--method", "hanner", "--eps", "2:2:1"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), format!("{CURVE_HEADER}\n2.0000000000000000e0,1.0000000000000000e0,hanner,,\n"));
}

#[test]
fn modulus_json() {
    let o = uconvex(&["modulus", "--p", "3", "--eps", "1:1:1", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let c = uconvex::io::curve_from_json(&stdout(&o)).unwrap();
    assert!((c.points()[0].delta - 0.0435344086138054).abs() < 1e-15);
    assert_eq!(c.points()[0].method, uconvex::modulus::Method::Clarkson);
}

#[test]
fn modulus_config_errors() {
    for args in [
        vec!["modulus", "--p", "1"],
        vec!["modulus", "--p", "inf"],
        vec!["modulus", "--p", "2", "--eps", "0:1:3"],
        vec!["modulus", "--p", "2", "--eps", "1:3:3"],
        vec!["modulus", "--p", "2", "--eps", "1:2"],
        vec!["modulus", "--p", "1.5", "--method", "clarkson"],
        vec!["modulus", "--p", "2", "--method", "empirical"],
        vec!["modulus", "--p", "2", "--method", "nope"],
        vec!["modulus"],
    ] {
        let o = uconvex(&args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn seed_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = ["modulus", "--p", "2", "--d", "2", "--method", "empirical", "--budget", "500", "--eps", "1:1:1"];
    let flag = Command::new(env!("CARGO_BIN_EXE_uconvex"))
        .args(args)
        .args(["--seed", "11", "--out", path(&a)])
        .status()
        .unwrap();
    let env = Command::new(env!("CARGO_BIN_EXE_uconvex"))
        .args(args)
        .args(["--out", path(&b)])
        .env("UCONVEX_SEED", "11")
        .status()
        .unwrap();
    assert!(flag.success() && env.success());
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn construct_shifted_reports_constant() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.json");
    let o = uconvex(&["construct", "--p", "2", "--d", "64", "--sequence", "shifted", "--out", path(&out)]);
    // the greedy loop runs out of pairs before max-len
    assert_eq!(code(&o), 3);
    let err = stderr(&o);
    assert!(err.contains("branch=low outputs=31"), "{err}");
    assert!(err.contains("status=exhausted"));
    let trace: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    let sep = trace["final_certificate"]["min_pairwise"].as_f64().unwrap();
    assert!(sep >= 1.0285955);
    assert!((sep - 2f64.sqrt()).abs() < 1e-9);
    assert_eq!(trace["output"].as_array().unwrap().len(), 31);
}

#[test]
fn construct_basis_goes_high() {
    let o = uconvex(&["construct", "--p", "2", "--d", "16", "--sequence", "basis"]);
    assert_eq!(code(&o), 0);
    let trace: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(trace["branch"], "high");
    assert_eq!(trace["final_certificate"]["min_pairwise"].as_f64(), Some(2f64.sqrt()));
}

#[test]
fn construct_singleton() {
    let o = uconvex(&["construct", "--p", "2", "--d", "8", "--max-len", "1", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn construct_bad_seed_spec() {
    for args in [
        vec!["construct", "--p", "2", "--d", "4", "--sequence", "basis", "--n", "5"],
        vec!["construct", "--p", "2", "--d", "1", "--sequence", "shifted"],
        vec!["construct", "--p", "2", "--d", "4", "--sequence", "circle"],
        vec!["construct", "--p", "2", "--d", "4", "--max-len", "0"],
    ] {
        assert_eq!(code(&uconvex(&args)), 2, "{args:?}");
    }
}

#[test]
fn extract_basis_l2_200() {
    let o = uconvex(&["extract", "--p", "2", "--d", "200", "--sequence", "basis"]);
    assert_eq!(code(&o), 0);
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["selected"].as_array().unwrap().len(), 199);
    assert!((r["pair_min"].as_f64().unwrap() - 3f64.sqrt()).abs() < 1e-9);
    assert!((r["guaranteed"].as_f64().unwrap() - 1.118_082_896_311_803).abs() < 1e-12);
}

#[test]
fn extract_insufficient_cluster() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("seq.csv");
    std::fs::write(&input, sequence_to_csv(&[Vector::basis(2, 0), Vector::basis(2, 0).scale(-1.0)])).unwrap();
    let o = uconvex(&["extract", "--p", "2", "--d", "2", "--input", path(&input)]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("points guarantee a pair"));
    let diag: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(diag["best_count"], 1);
    assert_eq!(diag["points"], 2);
}

#[test]
fn extract_baseline_constant_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("seq.csv");
    std::fs::write(&input, "0.6,0.8\n0.6,0.8\n0.6,0.8\n0.6,0.8\n").unwrap();
    let o = uconvex(&["extract", "--p", "2", "--d", "2", "--mode", "baseline", "--input", path(&input), "--x", "0,1"]);
    assert_eq!(code(&o), 0);
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["pair_min"].as_f64(), Some(1.0));
    assert_eq!(r["selected"].as_array().unwrap().len(), 4);
}

#[test]
fn verify_small_grid_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("reports.json");
    let o = uconvex(&[
        "verify", "--p", "1.5,3", "--d", "2", "--eps", "0.5,1.9", "--trials", "2000", "--format", "json", "--out",
        path(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary = stdout(&o);
    assert_eq!(summary.lines().next(), Some(uconvex::verify::SUMMARY_HEADER));
    // 3 sampled statements (contraction at two ranks) x 2 p x 2 eps, plus 2 curves
    assert_eq!(summary.lines().count(), 1 + 4 * 4 + 2);
    assert!(summary.lines().skip(1).all(|l| l.ends_with(",0")));
    let reports: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 18);
}

#[test]
fn verify_corrupted_curve_fails() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("bad.csv");
    std::fs::write(&curve, format!("{CURVE_HEADER}\n0.25,0.01,clarkson,,\n0.5,0.4,clarkson,,\n1,0.5,clarkson,,\n")).unwrap();
    let o = uconvex(&["verify", "--curve", path(&curve), "--p", "2", "--format", "json"]);
    assert_eq!(code(&o), 1);
    let reports: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let v = &reports[0]["violations"][0];
    assert_eq!(v["rule"], "delta_at_most_half_eps");
    assert_eq!(v["eps"].as_f64(), Some(0.5));
    assert_eq!(v["delta"].as_f64(), Some(0.4));
}

#[test]
fn verify_boundary_point_passes() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("edge.csv");
    std::fs::write(&curve, format!("{CURVE_HEADER}\n2,1,clarkson,,\n")).unwrap();
    let o = uconvex(&["verify", "--curve", path(&curve), "--p", "2"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn verify_config_errors() {
    assert_eq!(code(&uconvex(&["verify", "--trials", "0"])), 2);
    assert_eq!(code(&uconvex(&["verify", "--p", "0.9", "--trials", "10"])), 2);
    assert_eq!(code(&uconvex(&["verify", "--eps", "2.5", "--trials", "10"])), 2);
    assert_eq!(code(&uconvex(&["verify", "--statement", "contraction", "--rank", "0", "--trials", "10"])), 2);
}
