use std::path::Path;
use std::process::{Command, Output};

fn robustmax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robustmax")).args(args).output().unwrap()
}

fn fixture(name: &str) -> String {
    format!("{}/../core/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_fixture_exits_zero() {
    let out = robustmax(&["solve", &fixture("instance1.json")]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("objective  298.52"), "{text}");
}

#[test]
fn csv_report_has_exact_header() {
    let out = robustmax(&["solve", &fixture("instance2.json"), "--oracle", "exact", "--report", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("id,dim,k,rw_time_s,rw_lb,obj,gap_pct,cpu_s,sep_time_pct,nodes"));
    assert!(lines.next().unwrap().starts_with("numerical-instance-2,2,2,"));
}

#[test]
fn generate_then_solve_with_heuristic_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("g.json");
    let out = robustmax(&["generate", "--dim", "2", "--k", "3", "--seed", "5", "--out", path(&file)]);
    assert!(out.status.success());
    let out = robustmax(&["solve", path(&file), "--oracle", "lc1", "--time-limit", "1", "--report", "csv"]);
    // a heuristic oracle cannot certify, so the run ends on a limit or an empty tree
    assert!(matches!(out.status.code(), Some(0 | 2)));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().nth(1).unwrap().split(',').nth(6), Some("NA"));
}

#[test]
fn budget_exhaustion_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("g.json");
    robustmax(&["generate", "--dim", "3", "--k", "40", "--seed", "1", "--out", path(&file)]);
    let out = robustmax(&["solve", path(&file), "--time-limit", "0.2", "--warmstart-proposals", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stdout).unwrap().contains("TimeLimit"));
}

#[test]
fn bench_from_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.csv");
    let csv = dir.path().join("out.csv");
    std::fs::write(&spec, "id,dim,k,seed\nx,2,3,4\ny,2,2,5\n").unwrap();
    let out = robustmax(&["bench", "--spec", path(&spec), "--out", path(&csv), "--time-limit", "10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(1).unwrap().starts_with("x,2,3,"));
}

#[test]
fn maximin_instance_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("pts.txt");
    let inst = dir.path().join("m.json");
    std::fs::write(&pts, "0 0\n1 1\n").unwrap();
    let out = robustmax(&["maximin", "--points", path(&pts), "--p", "1", "--box", "0,1", "--out", path(&inst)]);
    assert!(out.status.success());
    let out = robustmax(&["solve", path(&inst)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("objective  1"));
}

#[test]
fn missing_file_exits_one() {
    let out = robustmax(&["solve", "/definitely/not/here.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error:"));
}
