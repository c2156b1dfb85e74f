use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracpoisson"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_to(dir: &Path, name: &str, args: &[&str]) -> (Output, String) {
    let path = dir.join(name);
    let mut all: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap().to_string();
    all.extend(["--out", &p]);
    let out = run(&all);
    let text = std::fs::read_to_string(&path).unwrap_or_default();
    (out, text)
}

// Header row and data rows of a CSV file, comment lines dropped.
fn table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let head = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (head, rows)
}

fn col(head: &[String], name: &str) -> usize {
    head.iter().position(|h| h == name).unwrap()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn poisson(n: usize, t: f64) -> f64 {
    (1..=n).fold((-t).exp(), |p, k| p * t / k as f64)
}

#[test]
fn unit_order_pmf_is_poisson() {
    let dir = tempfile::tempdir().unwrap();
    let (out, text) = run_to(dir.path(), "pmf.csv", &["pmf", "--beta", "1", "--t", "1", "--paths", "2000"]);
    assert!(out.status.success());
    assert!(text.starts_with("# fracpoisson "));
    assert!(text.lines().any(|l| l.starts_with("# config: ")));
    assert!(text.lines().any(|l| l == "# seed: 1"));
    let (head, rows) = table(&text);
    assert_eq!(head, ["n", "analytic_p", "mc_p", "mc_stderr"]);
    for r in &rows {
        let n: usize = r[0].parse().unwrap();
        assert!((num(&r[1]) - poisson(n, 1.0)).abs() < 1e-11, "row {n}");
    }
}

#[test]
fn invalid_order_is_rejected() {
    let out = run(&["pmf", "--beta", "1.5", "--t", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--beta"));
    let out = run(&["pmf", "--beta", "0.5", "--time", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["fidi", "--beta", "0.5", "--times", "1,2", "--counts", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["fidi", "--beta", "0.5", "--times", "2,1", "--counts", "0,1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["fidi", "--beta", "0.6", "--times", "1,2", "--counts", "1,2", "--paths", "20000", "--seed", "5"];
    let (_, a) = run_to(dir.path(), "a.csv", &args);
    let (_, b) = run_to(dir.path(), "b.csv", &args);
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn json_mirror() {
    let out = run(&["pmf", "--beta", "0.5", "--t", "1", "--paths", "0", "--format", "json"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["meta"]["command"], "pmf");
    assert_eq!(doc["meta"]["seed"], 1);
    let first = &doc["rows"][0];
    assert!((first["analytic_p"].as_f64().unwrap() - 0.427_583_576_156).abs() < 1e-12);
    assert!(first["mc_p"].is_null());
}

#[test]
fn memoryless_residual_columns() {
    let dir = tempfile::tempdir().unwrap();
    let (out, text) = run_to(
        dir.path(),
        "res.csv",
        &["residual", "--beta", "1", "--t1", "2", "--n1", "1", "--paths", "50000"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (head, rows) = table(&text);
    assert_eq!(head, ["t", "analytic_fU", "mc_fU", "analytic_fY", "mc_fY"]);
    let fy = col(&head, "analytic_fY");
    let fu = col(&head, "analytic_fU");
    let w = 0.01;
    let mut seen = 0;
    for r in rows.iter().filter(|r| !r[fy].is_empty()) {
        let t = num(&r[0]);
        let want = ((-(t - w / 2.0)).exp() - (-(t + w / 2.0)).exp()) / w;
        assert!((num(&r[fy]) - want).abs() < 1e-8, "t={t}");
        seen += 1;
    }
    assert_eq!(seen, 500);
    // one epoch in (0, 2] is uniform there
    for r in rows.iter().filter(|r| !r[fu].is_empty()) {
        assert!((num(&r[fu]) - 0.5).abs() < 1e-8);
    }
}

#[test]
fn rare_condition_exit_status() {
    let out = run(&["residual", "--beta", "1", "--t1", "0.01", "--n1", "5", "--paths", "1000"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn fidi_rows() {
    let out = run(&["fidi", "--beta", "1", "--times", "1,2,3", "--counts", "1,2,4", "--paths", "0"]);
    assert!(out.status.success());
    let (head, rows) = table(&String::from_utf8(out.stdout).unwrap());
    let j = col(&head, "joint_p");
    let want = poisson(1, 1.0) * poisson(1, 1.0) * poisson(2, 1.0);
    assert!((num(&rows[2][j]) - want).abs() < 1e-8);
    assert!((num(&rows[0][j]) - poisson(1, 1.0)).abs() < 1e-12);

    let out = run(&["fidi", "--beta", "0.5", "--times", "1,2", "--counts", "0,1", "--paths", "0"]);
    let (head, rows) = table(&String::from_utf8(out.stdout).unwrap());
    let o = col(&head, "oracle_p");
    assert!((num(&rows[1][col(&head, "joint_p")]) - 0.048_788_411_986).abs() < 1e-10);
    assert!(num(&rows[1][col(&head, "joint_minus_oracle")]).abs() < 1e-4);
    assert!((num(&rows[1][o]) - 0.048_788_411_986).abs() < 1e-10);
}

#[test]
fn one_point_fidi_matches_pmf() {
    let pmf = run(&["pmf", "--beta", "0.7", "--t", "1.3", "--paths", "0"]);
    let (ph, prow) = table(&String::from_utf8(pmf.stdout).unwrap());
    let fidi = run(&["fidi", "--beta", "0.7", "--times", "1.3", "--counts", "2", "--paths", "0"]);
    let (fh, frow) = table(&String::from_utf8(fidi.stdout).unwrap());
    assert_eq!(prow[2][col(&ph, "analytic_p")], frow[0][col(&fh, "joint_p")]);
}

#[test]
fn validate_report_and_failure_path() {
    let dir = tempfile::tempdir().unwrap();
    let (out, text) = run_to(dir.path(), "v.csv", &["validate", "--quick", "--only", "1,8"]);
    assert!(out.status.success(), "{text}");
    let (head, rows) = table(&text);
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[col(&head, "passed")] == "true"));

    let out = run(&["validate", "--only", "1", "--tol", "1e-30"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("false"));
}

#[test]
fn hidden_ml_eval() {
    let help = run(&["--help"]);
    assert!(!String::from_utf8_lossy(&help.stdout).contains("ml-eval"));
    let out = run(&["ml-eval", "--beta", "0.5", "--x", "-1"]);
    assert!(out.status.success());
    let (head, rows) = table(&String::from_utf8(out.stdout).unwrap());
    assert!((num(&rows[0][col(&head, "value")]) - 0.427_583_576_156).abs() < 1e-12);
    assert_eq!(run(&["ml-eval", "--beta", "0.5", "--x", "2"]).status.code(), Some(2));
}
