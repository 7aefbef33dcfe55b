//! The `lpactive` binary: verbs, outputs and exit codes.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn lpactive(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpactive")).args(args).output().unwrap()
}

fn scratch(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("lpactive-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn netlib(name: &str) -> String {
    format!("{}/tests/data/netlib/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn thresholds_prints_worked_example() {
    let out = lpactive(&["thresholds", "--samples", "100"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for want in ["0.0662", "0.0027", "0.0025", "1.040000"] {
        assert!(text.contains(want), "missing {want} in\n{text}");
    }
}

#[test]
fn gen_then_solve() {
    let d = scratch("gen");
    let out = lpactive(&["gen", "--kind", "ts2", "--count", "2", "--seed", "5", "--m-max", "20", "--out", d.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let inst = d.join("ts2-6.txt");
    assert!(inst.exists());
    let csv = d.join("trace.csv");
    let out = lpactive(&["solve", inst.to_str().unwrap(), "--iterations", "7", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 8);
    fs::remove_dir_all(d).unwrap();
}

#[test]
fn solve_mps_to_stdout() {
    let out = lpactive(&["solve", &netlib("afiro.mps"), "--lambda0", "0"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("k,mu_lambda,relres,alpha_p,alpha_d,active,inactive,undetermined,max_lambda,max_phi"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Converged"));
}

#[test]
fn config_errors_exit_2() {
    for args in [
        vec!["ratios", "--grid", "5,3", "--count", "1"],
        vec!["ratios", "--grid", "a..b", "--count", "1"],
        vec!["ratios", "--count", "0"],
        vec!["crossover", "--mu-cap", "-1", "--count", "1"],
        vec!["ratios", "--eta", "2", "--count", "1"],
        vec!["frobnicate"],
    ] {
        let out = lpactive(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn missing_file_exits_1_with_path() {
    let out = lpactive(&["solve", "/nonexistent/problem.mps"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/problem.mps"));
}

#[test]
fn strict_turns_problem_failures_into_exit_1() {
    let d = scratch("strict");
    let mps = d.join("mps");
    fs::create_dir_all(&mps).unwrap();
    fs::copy(netlib("afiro.mps"), mps.join("afiro.mps")).unwrap();
    // x1 + x2 = 1 and x1 + x2 = 2: rank repair reports it infeasible.
    fs::write(
        mps.join("bad.mps"),
        "NAME BAD\nROWS\n N COST\n E R1\n E R2\nCOLUMNS\n X1 COST 1 R1 1\n X1 R2 1\n X2 COST 1 R1 1\n X2 R2 1\nRHS\n RHS R1 1 R2 2\nENDATA\n",
    )
    .unwrap();
    let out_dir = d.join("out");
    let base = ["ratios-netlib", "--mps-dir", mps.to_str().unwrap(), "--out", out_dir.to_str().unwrap()];
    let lenient = lpactive(&base);
    assert_eq!(lenient.status.code(), Some(0), "{}", String::from_utf8_lossy(&lenient.stderr));
    let failures = fs::read_to_string(out_dir.join("failures.csv")).unwrap();
    assert!(failures.lines().nth(1).unwrap().starts_with("bad,"), "{failures}");
    let mut strict = base.to_vec();
    strict.push("--strict");
    assert_eq!(lpactive(&strict).status.code(), Some(1));
    fs::remove_dir_all(d).unwrap();
}

#[test]
fn crossover_writes_report() {
    let d = scratch("xo");
    let out = lpactive(&["crossover", "--count", "3", "--m-max", "25", "--out", d.to_str().unwrap(), "--strict"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["rows.csv", "aggregates.csv", "failures.csv", "rl_profile.svg"] {
        assert!(d.join(f).exists(), "{f}");
    }
    fs::remove_dir_all(d).unwrap();
}
