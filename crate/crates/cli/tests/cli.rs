use std::path::Path;
use std::process::{Command, Output};

fn apm(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_apm")).args(args).current_dir(dir).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn sieve_writes_cache() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&apm(&["sieve", "--limit", "1000", "--cache", "c.bin"], dir.path()));
    assert_eq!(v["primes"], 168);
    let bytes = std::fs::read(dir.path().join("c.bin")).unwrap();
    assert_eq!(&bytes[..6], b"APML1\x01");
    assert_eq!(u64::from_le_bytes(bytes[6..14].try_into().unwrap()), 1000);
    assert_eq!(bytes.len(), 14 + 8 * 1000);
    assert_eq!(f64::from_le_bytes(bytes[14 + 8 * 6..14 + 8 * 7].try_into().unwrap()), 7f64.ln());
}

#[test]
fn exact_values_are_rational_strings() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&apm(&["singular", "--op", "f", "--n", "15"], dir.path()));
    assert_eq!(v["value"], "8/3");
    let v = json(&apm(&["sums", "--op", "h", "--q", "3", "--u", "2", "--n", "3"], dir.path()));
    assert_eq!(v["brute"], "6/1");
    assert_eq!(v["agree"], true);
    let v = json(&apm(&["sums", "--op", "sdelta", "--X", "2"], dir.path()));
    assert_eq!(v["terms"], 2);
}

#[test]
fn analytic_and_contour_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&apm(&["analytic", "--fn", "zeta", "--s", "2"], dir.path()));
    assert!((v["value_re"].as_f64().unwrap() - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-12);
    assert_eq!(v["tail_bound"], 0.0);
    let v = json(&apm(&["contour", "--which", "meijer", "--params", "0.5", "1", "0.5", "1"], dir.path()));
    assert!((v["re"].as_f64().unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
    for key in ["im", "trunc_err", "quad_err"] {
        assert!(v[key].is_number());
    }
}

#[test]
fn chars_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = apm(&["chars", "--mod", "5", "--table"], dir.path());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "chi_index,n,re,im");
    assert_eq!(rows.len(), 1 + 4 * 5);
}

#[test]
fn moment_per_q_and_scan_summary() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&apm(&["moment", "--x", "10000", "--Q", "20", "--per-q", "p.csv"], dir.path()));
    assert_eq!(v["Q"], 20);
    let csv = std::fs::read_to_string(dir.path().join("p.csv")).unwrap();
    assert!(csv.starts_with("q,a_count,sum_E3,phi_q\n"));
    assert_eq!(csv.lines().count(), 21);
    let out = apm(&["scan", "--x-grid", "10000,20000,40000,80000", "--q-rule", "sqrt"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,Q,moment");
    assert_eq!(lines.len(), 6);
    let summary: serde_json::Value = serde_json::from_str(lines[5]).unwrap();
    assert!(summary["slope"].is_number());
}

#[test]
fn op_budget_refuses_large_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = apm(&["moment", "--x", "100000", "--Q", "1000", "--op-budget", "1000"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
}

#[test]
fn fit_recovers_model() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = String::from("X,value\n");
    for i in 0..12 {
        let x = 100.0 * 1.5f64.powi(i);
        s.push_str(&format!("{x},{}\n", 2.0 * x.powi(5) + x.powi(4) * (3.0 * x.ln() + 1.0)));
    }
    std::fs::write(dir.path().join("s.csv"), s).unwrap();
    let v = json(&apm(&["fit", "--input", "s.csv"], dir.path()));
    assert!((v["alpha"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert!((v["beta"].as_f64().unwrap() - 3.0).abs() < 1e-5);
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = apm(&["verify", "--suite", "exact"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let out = apm(&["verify", "--suite", "analytic"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL W_u(1e3)"));
}

#[test]
fn bad_arguments_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!apm(&["verify", "--suite", "everything"], dir.path()).status.success());
    assert!(!apm(&["sums", "--op", "aq", "--n", "1", "--q", "4"], dir.path()).status.success());
    assert!(!apm(&["analytic", "--fn", "L", "--s", "2"], dir.path()).status.success());
}
