use std::path::Path;
use std::process::{Command, Output};

fn rk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rk"))
        .args(args)
        .env_remove("RK_SEED")
        .env_remove("RK_WORKERS")
        .output()
        .expect("rk runs")
}

fn repo_file(rel: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel).to_string_lossy().into_owned()
}

#[test]
fn simulate_is_deterministic() {
    let a = rk(&["simulate", "--epsilon", "0.1", "--n-runs", "10", "--seed", "7"]);
    let b = rk(&["simulate", "--epsilon", "0.1", "--n-runs", "10", "--seed", "7", "--workers", "3"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(String::from_utf8_lossy(&a.stdout).lines().count(), 10);
    let c = rk(&["simulate", "--epsilon", "0.1", "--n-runs", "10", "--seed", "8"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn compare_identical_histograms_prints_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let s = rk(&["jump", "--n-samples", "200", "--hist-bins", "4", "--hist-v-max", "3", "--out", out]);
    assert!(s.status.success(), "{}", String::from_utf8_lossy(&s.stderr));
    let hist = dir.path().join("jump.hist");
    let h = hist.to_str().unwrap();
    let c = rk(&["compare", h, h]);
    assert!(c.status.success());
    assert_eq!(String::from_utf8_lossy(&c.stdout).trim(), "0.0");
}

#[test]
fn trees_classify_reads_simulate_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert!(rk(&["simulate", "--epsilon", "0.2", "--n-runs", "5", "--out", out]).status.success());
    let trees = dir.path().join("trees.jsonl");
    let c = rk(&["trees", "classify", trees.to_str().unwrap()]);
    assert!(c.status.success(), "{}", String::from_utf8_lossy(&c.stderr));
    let text = String::from_utf8_lossy(&c.stdout).into_owned();
    assert!(text.starts_with("epsilon,n,tau,"));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn experiment_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");
    let cfg = repo_file("configs/smoke.json");
    let e = rk(&["experiment", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(e.status.success(), "{}", String::from_utf8_lossy(&e.stderr));
    let report = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(
        report.lines().next().unwrap(),
        "epsilon,N,t,tv_empirical_vs_ideal,tv_mc_error,good_tree_fraction,mean_collisions,zeta_theoretical,zeta_empirical,aborted_runs"
    );
    assert_eq!(report.lines().count(), 3);
    assert!(out.join("tv_vs_epsilon.svg").exists());
}

#[test]
fn solve_writes_a_density() {
    let d = rk(&["solve", "--bins", "6", "--v-max", "3", "--j-max", "3", "--time-steps", "4"]);
    assert!(d.status.success(), "{}", String::from_utf8_lossy(&d.stderr));
    assert!(!d.stdout.is_empty());
}

#[test]
fn usage_and_config_errors_have_distinct_codes() {
    assert_eq!(rk(&["simulate", "--bogus"]).status.code(), Some(2));
    assert_eq!(rk(&[]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"epsilons": [0.1, 0.2], "realizations_per_eps": 100}"#).unwrap();
    assert_eq!(rk(&["experiment", "--config", bad.to_str().unwrap()]).status.code(), Some(1));
    let decreasing = std::fs::read_to_string(repo_file("configs/smoke.json")).unwrap().replace("[0.2, 0.1]", "[0.1, 0.2]");
    std::fs::write(&bad, decreasing).unwrap();
    let e = rk(&["experiment", "--config", bad.to_str().unwrap()]);
    assert_eq!(e.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&e.stderr).contains("decreasing"));
}
