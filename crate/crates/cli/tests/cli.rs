use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn toral(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toral"))
        .args(args)
        .output()
        .expect("spawn toral")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn beta_table_rows() {
    let out = stdout(&toral(&["beta", "--table", "10"]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "k,beta,residual,method");
    assert_eq!(lines.len(), 11);
    assert!(lines[1].starts_with("1,0.000000,"));
    assert!(lines[2].starts_with("2,0.373365,"));
    assert!(lines[3].starts_with("3,0.913728,"));
}

#[test]
fn beta_needs_k() {
    assert!(!toral(&["beta"]).status.success());
    assert!(!toral(&["beta", "--k", "0"]).status.success());
}

#[test]
fn sieve_count_small() {
    let out = stdout(&toral(&["sieve-count", "--T", "100"]));
    let rows: Vec<Vec<&str>> = out.lines().skip(1).map(|l| l.split(',').collect()).collect();
    let total: u64 = rows.iter().map(|r| r[1].parse::<u64>().unwrap()).sum();
    assert_eq!(total, 100);
    assert_eq!(rows[1][1], "25");
}

#[test]
fn orbit_rows_and_columns() {
    let out = stdout(&toral(&["orbit", "--named", "consecutive_lucas", "--nmax", "40"]));
    let mut lines = out.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,x_digits,y_digits,omega,exact,ratio,running_min"
    );
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty() && rows.len() <= 40);
    let mut prev = f64::INFINITY;
    for r in rows {
        let f: Vec<&str> = r.split(',').collect();
        assert_eq!(f.len(), 7);
        let m: f64 = f[6].parse().unwrap();
        assert!(m <= prev);
        prev = m;
    }
}

#[test]
fn orbit_custom_gamma_matches_named() {
    let named = stdout(&toral(&["orbit", "--named", "consecutive_fibonacci", "--nmax", "25"]));
    let custom = stdout(&toral(&["orbit", "--gamma", "1,1,1,0", "--v0", "1,0", "--nmax", "25"]));
    assert_eq!(named, custom);
}

#[test]
fn invalid_orbits_fail() {
    let singular = toral(&["orbit", "--gamma", "1,1,1,1", "--v0", "1,0", "--nmax", "5"]);
    assert!(!singular.status.success());
    assert!(String::from_utf8_lossy(&singular.stderr).contains("invertible"));
    let elliptic = toral(&["orbit", "--gamma", "0,-1,1,0", "--v0", "1,0", "--nmax", "5"]);
    assert!(!elliptic.status.success());
    let zero = toral(&["orbit", "--gamma", "2,1,1,1", "--v0", "0,0", "--nmax", "5"]);
    assert!(!zero.status.success());
    let usage = toral(&["orbit", "--nmax", "x"]);
    assert_eq!(usage.status.code(), Some(2));
}

#[test]
fn figure_one_small() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("f1.svg");
    let summary = dir.path().join("f1.json");
    let out = stdout(&toral(&[
        "figure",
        "1",
        "--nmax",
        "60",
        "--svg",
        svg.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]));
    assert!(out.starts_with("index,omega,exact,log_index,log_log,ratio,marker\n"));
    assert!(fs::read_to_string(&svg).unwrap().contains("<svg"));
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(meta["meta"]["figure"], 1);
    let flag = stdout(&toral(&["figure", "--id", "1", "--nmax", "60"]));
    assert_eq!(out, flag);
}

#[test]
fn figure_beyond_limit_needs_tables() {
    let o = toral(&["figure", "5", "--nmax", "260"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing factor data"));
}

#[test]
fn bad_table_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("bad.txt");
    fs::write(&t, "F 10 5 7\n").unwrap();
    let o = toral(&[
        "orbit",
        "--named",
        "consecutive_fibonacci",
        "--nmax",
        "5",
        "--tables",
        t.to_str().unwrap(),
    ]);
    assert!(!o.status.success());
}

fn run_config(dir: &Path, text: &str) -> Output {
    let p = dir.join("run.cfg");
    fs::write(&p, text).unwrap();
    toral(&["run", "--config", p.to_str().unwrap()])
}

#[test]
fn config_matches_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let direct = stdout(&toral(&["surd", "--P", "0", "--Q", "1", "--D", "2", "--nmax", "30"]));
    let via = stdout(&run_config(
        dir.path(),
        "command = surd\nP = 0\nQ = 1\nD = 2\nnmax = 30\n",
    ));
    assert_eq!(direct, via);
    let fig = stdout(&run_config(dir.path(), "command = figure\nid = 2\nnmax = 40\n"));
    assert_eq!(fig, stdout(&toral(&["figure", "2", "--nmax", "40"])));
    assert!(!run_config(dir.path(), "nmax = 3\n").status.success());
}

#[test]
fn saved_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("saved.cfg");
    let args = [
        "model-run",
        "--k",
        "2",
        "--C",
        "2",
        "--nmax",
        "40",
        "--seed",
        "9",
        "--trials",
        "3",
    ];
    let mut with_save: Vec<&str> = args.to_vec();
    with_save.extend(["--save-config", cfg.to_str().unwrap()]);
    let first = stdout(&toral(&with_save));
    let text = fs::read_to_string(&cfg).unwrap();
    assert!(text.starts_with("command = model-run\n") && !text.contains("save-config"));
    let second = stdout(&toral(&["run", "--config", cfg.to_str().unwrap()]));
    assert_eq!(first, second);
}

#[test]
fn model_runs_are_deterministic() {
    let args = [
        "nmax-run", "--k", "2", "--C", "1.5", "--nmax", "80", "--seed", "4", "--R", "3", "--trials", "50",
    ];
    let a = toral(&args);
    let b = toral(&args);
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(a.stderr, b.stderr);
    let summary: serde_json::Value = serde_json::from_slice(&a.stderr).unwrap();
    assert_eq!(summary["nmax"][0]["R"], 3);
    let other = toral(&[
        "nmax-run", "--k", "2", "--C", "1.5", "--nmax", "80", "--seed", "5", "--R", "3", "--trials", "50",
    ]);
    assert_ne!(stdout(&a), stdout(&other));
}

#[test]
fn out_file_written_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nested").join("beta.csv");
    let o = toral(&["beta", "--k", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success() && o.stdout.is_empty());
    assert!(fs::read_to_string(&out).unwrap().contains("3,0.913728"));
    let leftovers: Vec<_> = fs::read_dir(out.parent().unwrap()).unwrap().collect();
    assert_eq!(leftovers.len(), 1);
}

#[test]
fn forms_pell_example() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("s.json");
    let out = stdout(&toral(&[
        "forms",
        "--A",
        "1",
        "--B",
        "0",
        "--C",
        "-2",
        "--t",
        "4",
        "--height",
        "60",
        "--allow-non-square-free",
        "--summary",
        summary.to_str().unwrap(),
    ]));
    assert!(out.contains("4,2,0,"));
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(s["automorph"], "[[3, 4], [2, 3]]");
    let strict = toral(&[
        "forms", "--A", "1", "--B", "0", "--C", "-2", "--t", "4", "--height", "60",
    ]);
    assert!(!strict.status.success());
}

#[test]
fn sporadic_json() {
    let out = stdout(&toral(&["sporadic", "--pair", "FF", "--nmax", "100"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["hits"], serde_json::json!([3, 5, 11]));
    assert!(!toral(&["sporadic", "--pair", "XY"]).status.success());
}
