//! End-to-end tests of the `netexp` binary.

use std::path::Path;
use std::process::{Command, Output};

fn netexp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netexp"))
        .args(args)
        .output()
        .expect("failed to spawn netexp")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn summary_emits_one_csv_row() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("triangle.edges");
    write(&graph, "0 1\n1 2\n0 2\n");
    let out = netexp(&["summary", "--graph", graph.to_str().unwrap(), "--exact"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "network,nodes,edges,avg_degree,avg_pairwise_dist,diameter"
    );
    let row = lines.next().unwrap();
    assert!(row.starts_with("triangle,3,3,2.000000,1.000000,1"), "row = {row}");
}

#[test]
fn gen_graph_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.edges");
    let b = dir.path().join("b.edges");
    for out_path in [&a, &b] {
        let out = netexp(&[
            "gen-graph",
            "--generator",
            "watts_strogatz",
            "--n",
            "60",
            "--k",
            "4",
            "--beta",
            "0.2",
            "--seed",
            "9",
            "--out",
            out_path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn gen_graph_validates_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("bad.edges");
    let out = netexp(&[
        "gen-graph",
        "--generator",
        "erdos_renyi",
        "--n",
        "10",
        "--p",
        "1.5",
        "--seed",
        "1",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("error"));
}

#[test]
fn sim_variance_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("study.conf");
    write(
        &config,
        "generator = erdos_renyi\nn = 60\np = 0.1\ngamma_list = 0.5\nrho_max_list = 0,1\nreplicates = 120\n",
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out_path in [&a, &b] {
        let out = netexp(&[
            "sim-variance",
            "--config",
            config.to_str().unwrap(),
            "--seed",
            "7",
            "--out",
            out_path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let bytes_a = std::fs::read(&a).unwrap();
    assert_eq!(bytes_a, std::fs::read(&b).unwrap());
    let text = String::from_utf8(bytes_a).unwrap();
    assert!(text.starts_with("rho_max,gamma,sutva,expected,observed,ratio_expected,ratio_observed,status"));
    assert_eq!(text.lines().count(), 3); // header + 2 grid cells
    assert!(text.contains(",ok"));
}

#[test]
fn sim_subcommands_require_seed() {
    let out = netexp(&["sim-variance", "--generator", "erdos_renyi", "--n", "20", "--p", "0.2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--seed"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = netexp(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sim_normality_writes_into_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("results");
    let out = netexp(&[
        "sim-normality",
        "--generator",
        "erdos_renyi",
        "--n",
        "50",
        "--p",
        "0.1",
        "--gamma-list",
        "0.5",
        "--rho-max-list",
        "0",
        "--instances",
        "2",
        "--replicates",
        "60",
        "--seed",
        "3",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(out_dir.join("sim_normality.csv")).unwrap();
    assert!(csv.starts_with("network,nodes,rho_max,gamma,sw_statistic_avg,p_avg,p_min,p_max,status"));
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn sim_coverage_emits_grid_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = netexp(&[
        "sim-coverage",
        "--generator",
        "erdos_renyi",
        "--n",
        "60",
        "--p",
        "0.1",
        "--gamma-list",
        "0.5",
        "--rho-max-list",
        "0",
        "--replicates",
        "150",
        "--seed",
        "5",
        "--out",
        dir.path().join("cov.csv").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("cov.csv")).unwrap();
    assert!(csv.starts_with(
        "rho_max,gamma,tau_true,coverage_sutva,coverage_combined,coverage_oracle_adjusted,replicates,status"
    ));
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().ends_with(",ok"));
}

#[test]
fn estimate_reports_tau_and_interval() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.csv");
    let y = dir.path().join("y.csv");
    write(&w, "1\n1\n0\n0\n");
    write(&y, "1.0\n3.0\n2.0\n4.0\n");
    let out = netexp(&[
        "estimate",
        "--treatments",
        w.to_str().unwrap(),
        "--outcomes",
        y.to_str().unwrap(),
        "--level",
        "0.95",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["n"], 4);
    assert_eq!(json["n1"], 2);
    // tau_hat = 2 - 3 = -1; V_SUTVA = 2/2 + 2/2 = 2; V_tau = 0.
    assert!((json["tau_hat"].as_f64().unwrap() + 1.0).abs() < 1e-12);
    assert!((json["v_sutva"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!(json["v_tau"].as_f64().unwrap().abs() < 1e-12);
    let half = json["ci"]["half_width"].as_f64().unwrap();
    assert!((half - 1.959963984540054 * 2.0f64.sqrt()).abs() < 1e-6);
    assert!(
        (json["ci"]["lower"].as_f64().unwrap() - (-1.0 - half)).abs() < 1e-12
    );
}

#[test]
fn estimate_rejects_mismatched_lengths() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.csv");
    let y = dir.path().join("y.csv");
    write(&w, "1\n0\n");
    write(&y, "1.0\n2.0\n3.0\n");
    let out = netexp(&[
        "estimate",
        "--treatments",
        w.to_str().unwrap(),
        "--outcomes",
        y.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("different lengths"));
}

#[test]
fn diagnose_dependency_cross_checks_brute_force() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("path.edges");
    write(&graph, "0 1\n1 2\n2 3\n3 4\n");
    let dep_out = dir.path().join("dep.edges");
    let out = netexp(&[
        "diagnose-dependency",
        "--graph",
        graph.to_str().unwrap(),
        "--rho-max",
        "1",
        "--check-brute-force",
        "--gamma",
        "0.5",
        "--alpha-seed",
        "11",
        "--out",
        dep_out.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("n,edges,max_degree"));
    assert!(text.contains("brute_force_agrees,true"));
    // P5 at rho_max = 1: dependency edges iff distance <= 2.
    let edges = std::fs::read_to_string(&dep_out).unwrap();
    assert_eq!(edges.lines().count(), 7);
}

#[test]
fn stein_bound_reads_moments_csv() {
    let dir = tempfile::tempdir().unwrap();
    let moments = dir.path().join("moments.csv");
    write(&moments, "0.5,0.25\n0.5,0.25\n# comment\n0.5,0.25\n");
    let out = netexp(&[
        "stein-bound",
        "--moments",
        moments.to_str().unwrap(),
        "--d",
        "2",
        "--sigma-sq",
        "1.5",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["d"], 2);
    let term1 = json["term1"].as_f64().unwrap();
    let expected = 2.0f64.powf(1.5) / 1.5 * (1.5f64).sqrt();
    assert!((term1 - expected).abs() < 1e-10);
    assert!(json["bound"].as_f64().unwrap() > 0.0);
}

#[test]
fn malformed_graph_file_fails_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("bad.edges");
    write(&graph, "0 1\nnot numbers\n");
    let out = netexp(&["summary", "--graph", graph.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 2"));
}
