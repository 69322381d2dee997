//! End-to-end tests of the `sourcecount` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sourcecount"))
        .args(args)
        .env("SOURCECOUNT_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(key))
        .unwrap_or_else(|| panic!("no '{key}' line in:\n{text}"))
        .trim()
        .to_string()
}

fn write_scenario(dir: &Path, json: &str) -> String {
    let path = dir.join("scenario.json");
    fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn noise_only_spectrum_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let w = "[0,0,0,0,0,0,0,0,0,0]";
    let path = write_scenario(dir.path(), &format!(r#"{{"p":10,"sources":[],"noise":{{"sigma2":1.0,"w":{w}}}}}"#));
    let out = run(&["eigvals", "--scenario", &path]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "1.000\n".repeat(10));
}

#[test]
fn strong_mismatch_preset_spectrum() {
    let out = run(&["eigvals", "--preset", "fig4"]);
    assert_eq!(out.status.code(), Some(0));
    let values: Vec<f64> = stdout(&out).lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(values.len(), 10);
    for (got, want) in values[..4].iter().zip([20.13, 10.93, 2.0, 1.36]) {
        assert!((got - want).abs() <= 0.02 * want, "{values:?}");
    }
    assert!((values[9] - 0.62).abs() <= 0.02 * 0.62, "{values:?}");
}

#[test]
fn noise_only_estimate_selects_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(dir.path(), r#"{"p":6,"sources":[],"noise":{"sigma2":1.0,"w":[0,0,0,0,0,0]}}"#);
    let out = run(&["estimate", "--scenario", &path, "--n", "10000", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(field(&text, "q_hat_gmdl:"), "0");
    assert_eq!(field(&text, "q_hat_rmdl:"), "0");
}

#[test]
fn no_mismatch_estimate_finds_three_sources() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("table.csv");
    let out = run(&["estimate", "--preset", "fig1", "--n", "10000", "--seed", "42", "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(field(&text, "q_hat_rmdl:"), "3");
    assert_eq!(field(&text, "q_hat_gmdl:"), "3");

    let table = fs::read_to_string(&csv).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("estimator,q,neg_log_likelihood,penalty,total"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 20);
    assert_eq!(rows.iter().filter(|r| r.starts_with("gmdl,")).count(), 10);
    assert_eq!(rows.iter().filter(|r| r.starts_with("rmdl,")).count(), 10);
}

#[test]
fn snapshot_dump_round_trips_through_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("x.bin");
    let first = run(&["estimate", "--preset", "fig4", "--n", "3000", "--seed", "9", "--dump", dump.to_str().unwrap()]);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(fs::metadata(&dump).unwrap().len(), 16 + 10 * 3000 * 16);
    let second = run(&["estimate", "--preset", "fig4", "--snapshots", dump.to_str().unwrap()]);
    assert_eq!(second.status.code(), Some(0));
    let (a, b) = (stdout(&first), stdout(&second));
    assert_eq!(field(&a, "q_hat_gmdl:"), field(&b, "q_hat_gmdl:"));
    assert_eq!(field(&a, "q_hat_rmdl:"), field(&b, "q_hat_rmdl:"));
}

#[test]
fn single_trial_sweep_csv() {
    let out = run(&["sweep-n", "--preset", "fig1", "--n-list", "500", "--trials", "1", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "{text}");
    assert_eq!(lines[0], "axis_value,pcd_gmdl,pcd_gmdl_ci,pcd_rmdl,pcd_rmdl_ci,trials");
    let cols: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(cols.len(), 6);
    assert_eq!(cols[0], "500");
    assert_eq!(cols[5], "1");
    for c in [cols[1], cols[3]] {
        assert!(c == "0.000000" || c == "1.000000", "{c}");
    }
}

#[test]
fn sweeps_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for path in [&a, &b] {
        let out = run(&[
            "sweep-rho", "--preset", "fig5", "--rho-list", "8,12", "--n", "250", "--trials", "4", "--seed", "77", "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let (a, b) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(a, b);
    assert!(String::from_utf8(a).unwrap().starts_with("axis_value,pcd_gmdl,pcd_gmdl_ci,pcd_rmdl,pcd_rmdl_ci,trials\n"));
}

#[test]
fn fit_reports_parameters() {
    let out = run(&["fit", "--preset", "fig2", "--q", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(field(&text, "q:"), "3");
    let ls_error: f64 = field(&text, "ls_error:").parse().unwrap();
    assert!(ls_error < 1e-12, "{text}");
    assert_eq!(field(&text, "converged:"), "true");
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let malformed = write_scenario(dir.path(), "{ not json");
    assert_eq!(run(&["eigvals", "--scenario", &malformed]).status.code(), Some(2));

    let unbalanced = dir.path().join("bad_w.json");
    fs::write(&unbalanced, r#"{"p":3,"sources":[],"noise":{"sigma2":1.0,"w":[0.5,0,0]}}"#).unwrap();
    assert_eq!(run(&["eigvals", "--scenario", unbalanced.to_str().unwrap()]).status.code(), Some(2));

    assert_eq!(run(&["eigvals", "--preset", "fig9"]).status.code(), Some(2));
    assert_eq!(run(&["eigvals", "--scenario", "/nonexistent/scenario.json"]).status.code(), Some(2));
    assert_eq!(run(&["fit", "--preset", "fig1", "--q", "10"]).status.code(), Some(2));
    assert_eq!(run(&["estimate", "--preset", "fig1", "--n", "1"]).status.code(), Some(2));
    assert_eq!(run(&["sweep-n", "--preset", "fig1", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_3() {
    // an all-zero recording has an all-zero sample covariance
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("zeros.bin");
    let (p, n) = (10u32, 20u64);
    let mut bytes = b"SNPB".to_vec();
    bytes.extend_from_slice(&p.to_le_bytes());
    bytes.extend_from_slice(&n.to_le_bytes());
    bytes.resize(16 + (p as usize) * (n as usize) * 16, 0);
    fs::write(&dump, bytes).unwrap();
    let out = run(&["estimate", "--preset", "fig1", "--snapshots", dump.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
