//! The binary end to end: outputs, exit codes, config files, determinism.

use std::path::Path;
use std::process::{Command, Output};

fn tailwedge(args: &[&str]) -> Output {
    tailwedge_env(args, &[])
}

fn tailwedge_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tailwedge"));
    cmd.args(args).env_remove("TAILWEDGE_WORKERS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

/// Column `name` of data row `row` as a number.
fn field(csv: &str, row: usize, name: &str) -> f64 {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let j = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.nth(row).unwrap().split(',').nth(j).unwrap().parse().unwrap()
}

const CIR: [&str; 10] = ["--model", "cir", "--a", "1", "--b", "0", "--sigma", "1", "--v0", "1"];

fn with<'a>(head: &[&'a str], base: &[&'a str], tail: &[&'a str]) -> Vec<&'a str> {
    head.iter().chain(base).chain(tail).copied().collect()
}

#[test]
fn mgf_rows() {
    let o = tailwedge(&["mgf", "--model", "gamma", "--k", "1", "--theta", "1", "--p", "0.5"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "p,logmgf,mgf\n0.50000000000000000,0.69314718055994529,2.0000000000000000\n");

    let o = tailwedge(&[
        "mgf", "--model", "cir", "--a", "1", "--b", "1", "--sigma", "1", "--v0", "1", "--l1", "0.3", "--l2", "0.2",
        "--t", "0.7", "--p", "1.0",
    ]);
    assert_eq!(code(&o), 0);
    let p = tailwedge::riccati::CirParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
    let want = tailwedge::riccati::log_mgf(&p, 0.3, 0.2, 0.7).unwrap();
    assert_eq!(stdout(&o).lines().count(), 2);
    assert_eq!(field(&stdout(&o), 0, "logmgf"), want);

    let o = tailwedge(&with(&["mgf"], &CIR, &["--t", "1", "--l2", "1", "--p", "0.5,1,2"]));
    assert_eq!(stdout(&o).lines().count(), 4);
}

#[test]
fn mgf_past_the_explosion_exits_three() {
    let o = tailwedge(&with(&["mgf"], &CIR, &["--t", "10", "--l1", "5", "--l2", "5"]));
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("moment-exploded at t*="), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
}

#[test]
fn heston_and_vg() {
    let o = tailwedge(&with(&["mgf"], &CIR, &["--model", "heston", "--rho", "-0.5", "--t", "1", "--p", "1"]));
    assert_eq!(code(&o), 0);
    assert_eq!(field(&stdout(&o), 0, "logmgf"), 0.0);
    let o = tailwedge(&["mgf", "--model", "vg", "--c", "1", "--g", "1", "--m", "1", "--p", "0.5"]);
    assert!((field(&stdout(&o), 0, "logmgf") - (4.0f64 / 3.0).ln()).abs() < 1e-15);
    let o = tailwedge(&["mgf", "--model", "vg", "--c", "1", "--g", "1", "--p", "0.5"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--m"));
}

#[test]
fn critical_rows() {
    let o = tailwedge(&with(&["critical"], &CIR, &["--l1", "0", "--l2", "1", "--t", "1"]));
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!((field(&out, 0, "mu_star") - 4.9348022).abs() < 1e-7);
    assert!((field(&out, 0, "omega") - 19.7392).abs() < 1e-4);
    assert!(out.lines().nth(2).unwrap().starts_with("minus,inf,"));

    let o = tailwedge(&with(&["critical"], &CIR, &["--l1", "0", "--l2", "-1", "--t", "1", "--side", "minus"]));
    assert_eq!(code(&o), 0);
    assert!((field(&stdout(&o), 0, "mu_star") - 4.9348022).abs() < 1e-7);

    let o = tailwedge(&with(&["critical"], &CIR, &["--l1", "0", "--l2", "0", "--t", "1"]));
    assert_eq!(code(&o), 2);
}

#[test]
fn tail_rows() {
    let o = tailwedge(&["tail", "--model", "gamma", "--k", "1", "--theta", "1", "--R", "10"]);
    assert_eq!(code(&o), 0);
    assert!((field(&stdout(&o), 0, "lambda_star") - 6.697414907).abs() < 1e-9);
    assert_eq!(field(&stdout(&o), 0, "band_exponent_low"), -1.0);

    let o = tailwedge(&with(&["tail"], &CIR, &["--l1", "0", "--l2", "1", "--t", "1", "--R", "10,20"]));
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!((field(&out, 0, "corollary_center") + 21.25).abs() < 0.01, "{out}");
    assert_eq!(field(&out, 0, "corollary_c_low"), 0.25);
    assert!(out.lines().nth(1).unwrap().ends_with(",true"));

    let o = tailwedge(&["tail", "--model", "gamma", "--k", "1", "--theta", "1", "--R", "0.5"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("below-mean"));
}

#[test]
fn argument_errors_exit_two() {
    for args in [
        vec!["mgf", "--model", "gamma", "--k", "abc", "--theta", "1"],
        vec!["mgf", "--model", "gamma", "--k", "inf", "--theta", "1"],
        vec!["mgf", "--model", "gamma", "--k", "-1", "--theta", "1"],
        vec!["mgf", "--model", "gamma", "--theta", "1"],
        vec!["mgf", "--k", "1"],
        vec!["mgf", "--model", "gamma", "--bogus", "1"],
        vec!["frobnicate"],
        vec!["validate", "--only", "nope"],
    ] {
        let o = tailwedge(&args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
    }
    assert_eq!(code(&tailwedge(&["--help"])), 0);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gamma.conf");
    std::fs::write(&path, "# Gamma with unit scale\nmodel = gamma\nk = 1\ntheta = 1   # scale\np = 0.5\n").unwrap();
    let cfg = path.to_str().unwrap();
    let o = tailwedge(&["mgf", "--config", cfg]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(field(&stdout(&o), 0, "logmgf"), 2f64.ln());
    let o = tailwedge(&["mgf", "--config", cfg, "--k", "2"]);
    assert_eq!(field(&stdout(&o), 0, "logmgf"), 2.0 * 2f64.ln());

    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "model = gamma\nshape = 1\n").unwrap();
    assert_eq!(code(&tailwedge(&["mgf", "--config", bad.to_str().unwrap()])), 2);
    assert_eq!(code(&tailwedge(&["mgf", "--config", "/nonexistent/x.conf"])), 2);
}

fn simulate_to(out: &Path, workers: Option<&str>, env: &[(&str, &str)]) -> Output {
    let mut args = with(
        &["simulate"],
        &CIR,
        &["--l1", "0", "--l2", "1", "--t", "1", "--R", "5,10,20", "--paths", "2000", "--steps", "32", "--seed", "42"],
    );
    args.extend(["--out", out.to_str().unwrap()]);
    if let Some(w) = workers {
        args.extend(["--workers", w]);
    }
    tailwedge_env(&args, env)
}

#[test]
fn simulate_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let files: Vec<_> = (0..5).map(|i| dir.path().join(format!("run{i}.csv"))).collect();
    assert_eq!(code(&simulate_to(&files[0], Some("1"), &[])), 0);
    assert_eq!(code(&simulate_to(&files[1], Some("1"), &[])), 0);
    assert_eq!(code(&simulate_to(&files[2], Some("4"), &[])), 0);
    assert_eq!(code(&simulate_to(&files[3], None, &[("TAILWEDGE_WORKERS", "3")])), 0);
    assert_eq!(code(&simulate_to(&files[4], None, &[])), 0);
    let first = std::fs::read(&files[0]).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    assert_eq!(text.lines().count(), 4, "{text}");
    assert!(text.starts_with("kind,arg,estimate,ci_low,ci_high,std_error,n_exceed,closed_form\n"));
    for f in &files[1..] {
        assert_eq!(std::fs::read(f).unwrap(), first);
    }
}

#[test]
fn simulate_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let mut args = with(&["simulate"], &CIR, &["--l2", "1", "--t", "1", "--R", "5", "--paths", "10"]);
    assert_eq!(code(&tailwedge(&args)), 2);
    args.truncate(args.len() - 2);
    assert_eq!(code(&tailwedge_env(&args, &[("TAILWEDGE_WORKERS", "zero")])), 2);
    assert_eq!(code(&simulate_to(&out, Some("0"), &[])), 2);
    let o = tailwedge(&with(&["simulate"], &CIR, &["--l2", "1", "--t", "1", "--paths", "200", "--p", "4.5"]));
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("p-too-close-to-critical"));
}

#[test]
fn simulate_reports_both_kinds() {
    let o = tailwedge(&with(
        &["simulate"],
        &CIR,
        &["--l2", "1", "--t", "1", "--R", "1,3", "--p", "1", "--paths", "5000", "--steps", "16"],
    ));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    let kinds: Vec<&str> = out.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(kinds, ["tail", "tail", "mgf"]);
    // R = 1 is below the mean 1.5, so the bound is trivial.
    assert_eq!(field(&out, 0, "closed_form"), 1.0);
    let (lo, hi) = (field(&out, 2, "ci_low"), field(&out, 2, "ci_high"));
    assert!(lo < hi);
}

#[test]
fn validate_single_criterion() {
    let o = tailwedge(&["validate", "--only", "gamma"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 1);
    assert!(out.starts_with("PASS [ 3]"), "{out}");
    let o = tailwedge(&["validate", "--only", "riccati", "--quick"]);
    assert_eq!(code(&o), 0);
}
