use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn asset(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets").join(rel)
}

fn dst(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dst")).args(args).output().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn record(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: stdout {:?} stderr {:?}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn lines(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn write_scenario(dir: &Path, name: &str, body: Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body.to_string()).unwrap();
    p
}

fn steady_path_scenario(dir: &Path) -> PathBuf {
    write_scenario(
        dir,
        "steady.json",
        serde_json::json!({
            "graph": {"n": 4, "edges": [[0, 1, 1.0], [1, 2, 1.0], [2, 3, 1.0]]},
            "gamma": 0.3,
            "case": "I",
            "initial_limits": [40.0, 10.0, 30.0, 20.0],
            "load": {"kind": "steady", "r": [10.0, 20.0, 30.0, 40.0]},
            "horizon": 600,
            "seed": 3
        }),
    )
}

#[test]
fn analyze_complete_graph_at_optimal_weights() {
    let out = dst(&["analyze", "--graph", path_str(&asset("graphs/k5.txt")), "--gamma", "1"]);
    assert!(out.status.success());
    let r = record(&out);
    assert!(r["phi_cr"].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(r["stable"], Value::Bool(true));
    assert_eq!(r["centrality"].as_array().unwrap().len(), 5);
}

#[test]
fn analyze_reports_infinite_dispersion_with_exit_two() {
    let out = dst(&["analyze", "--graph", path_str(&asset("graphs/p2.txt")), "--gamma", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let r = record(&out);
    assert_eq!(r["phi_cr"].as_f64(), Some(1.0));
    assert_eq!(r["phi_ss"].as_str(), Some("inf"));
}

#[test]
fn missing_graph_file_is_an_input_error_naming_the_path() {
    let out = dst(&["analyze", "--graph", "/no/such/graph.txt", "--gamma", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/graph.txt"));
}

#[test]
fn unknown_verb_is_an_input_error() {
    assert_eq!(dst(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(dst(&["--help"]).status.code(), Some(0));
}

#[test]
fn design_gamma_steady_on_a_path() {
    let out = dst(&["design-gamma", "--graph", path_str(&asset("graphs/p2.txt"))]);
    assert!(out.status.success());
    let r = record(&out);
    assert!((r["gamma"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!(r["objective"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn design_writes_a_graph_that_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = dst(&[
        "design",
        "--mode",
        "robust",
        "--graph",
        path_str(&asset("graphs/triangle.txt")),
        "--gamma",
        "0.1",
        "--noise",
        "iid:1",
        "--out",
        path_str(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let designed = dir.path().join("graph.txt");
    let again = dst(&["analyze", "--graph", path_str(&designed), "--gamma", "0.1", "--gamma-scaling", "off"]);
    let phi = record(&again)["phi_ss"].as_f64().unwrap();
    assert!((phi - record(&out)["objective"].as_f64().unwrap()).abs() < 1e-9);
    assert!(dir.path().join("design.json").exists());
}

#[test]
fn nonsteady_design_without_interior_optimum_exits_three() {
    let out = dst(&[
        "design-gamma",
        "--mode",
        "gamma-nonsteady",
        "--graph",
        path_str(&asset("graphs/path8.txt")),
        "--noise",
        "iid:1",
        "--gamma-scaling",
        "on",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn simulate_is_deterministic_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let sc = asset("scenarios/noisy_path8.json");
    let mut csv = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let out = dst(&["simulate", "--scenario", path_str(&sc), "--seed", "5", "--out", path_str(&out_dir)]);
        assert!(out.status.success());
        csv.push(std::fs::read(out_dir.join("trajectory.csv")).unwrap());
    }
    assert_eq!(csv[0], csv[1]);
    let header = String::from_utf8_lossy(&csv[0]).lines().next().unwrap().to_string();
    assert!(header.starts_with("k,x_0,"));
    assert!(header.ends_with(",r_total,a_total,a_ideal"));
}

#[test]
fn steady_case_one_reaches_consensus() {
    let dir = tempfile::tempdir().unwrap();
    let sc = steady_path_scenario(dir.path());
    let out = dst(&["simulate", "--scenario", path_str(&sc), "--out", path_str(dir.path()), "--emit-plot-data"]);
    assert!(out.status.success());
    let r = record(&out);
    assert!(r["final_spread"].as_f64().unwrap() <= 1e-6);
    assert!(r["conservation_residual"].as_f64().unwrap() <= 1e-9);
    let plot = std::fs::read_to_string(dir.path().join("plot_data.csv")).unwrap();
    assert_eq!(plot.lines().next(), Some("k,series,value"));
}

#[test]
fn bundled_steady_scenario_runs() {
    let out = dst(&["simulate", "--scenario", path_str(&asset("scenarios/steady_star8.json"))]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(record(&out)["final_spread"].as_f64().unwrap() < 1e-6);
}

#[test]
fn seed_sweep_on_steady_loads_gives_identical_rows() {
    let dir = tempfile::tempdir().unwrap();
    let sc = steady_path_scenario(dir.path());
    let out = dst(&["sweep", "--scenario", path_str(&sc), "--sweep", "seed=1,2,3"]);
    assert!(out.status.success());
    let rows = lines(&out);
    assert_eq!(rows.len(), 3);
    for row in &rows[1..] {
        assert_eq!(row["summary"], rows[0]["summary"]);
    }
}

#[test]
fn graph_list_sweep_keeps_input_order() {
    let tree = asset("two_trees/tree.txt");
    let plus = asset("two_trees/tree_plus3.txt");
    let spec = format!("graph-file-list={},{},{}", tree.display(), plus.display(), tree.display());
    let out = dst(&["sweep", "--scenario", path_str(&asset("two_trees/tree.json")), "--sweep", &spec]);
    assert!(out.status.success());
    let rows = lines(&out);
    let values: Vec<&str> = rows.iter().map(|r| r["value"].as_str().unwrap()).collect();
    assert_eq!(values, [tree.to_str().unwrap(), plus.to_str().unwrap(), tree.to_str().unwrap()]);
    assert_eq!(rows[0]["summary"], rows[2]["summary"]);
    let ot = |r: &Value| r["summary"]["over_throttling_pct"].as_f64().unwrap();
    assert!(ot(&rows[1]) < ot(&rows[0]));
}

#[test]
fn gamma_sweep_rows_match_individual_runs() {
    let sc = asset("scenarios/noisy_path8.json");
    let out = dst(&["sweep", "--scenario", path_str(&sc), "--sweep", "gamma=0.1,0.25"]);
    assert!(out.status.success());
    let rows = lines(&out);
    for (row, gamma) in rows.iter().zip(["0.1", "0.25"]) {
        let single = record(&dst(&["simulate", "--scenario", path_str(&sc), "--gamma", gamma]));
        assert_eq!(row["summary"]["mean_dispersion"], single["mean_dispersion"]);
        assert_eq!(row["phi_cr"], single["phi_cr"]);
    }
}

#[test]
fn gamma_sweep_dispersion_is_smallest_near_the_optimal_cycle() {
    let sc = asset("scenarios/noisy_path8.json");
    let design = record(&dst(&[
        "design-gamma",
        "--mode",
        "gamma-nonsteady",
        "--graph",
        path_str(&asset("graphs/path8.txt")),
        "--noise",
        "iid:1",
    ]));
    let best = design["gamma"].as_f64().unwrap();
    let grid: Vec<String> = [0.3, 0.6, 1.0, 1.1, 1.18].iter().map(|t| format!("{}", t * best)).collect();
    let out = dst(&["sweep", "--scenario", path_str(&sc), "--sweep", &format!("gamma={}", grid.join(","))]);
    let rows = lines(&out);
    let phi: Vec<f64> = rows.iter().map(|r| r["phi_ss"].as_f64().unwrap()).collect();
    let argmin = phi.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert_eq!(argmin, 2, "{phi:?}");
    let empirical: Vec<f64> = rows.iter().map(|r| r["summary"]["mean_dispersion"].as_f64().unwrap()).collect();
    assert!(empirical[2] < empirical[0] && empirical[2] < empirical[4], "{empirical:?}");
}

#[test]
fn domain_violation_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    // Case III divides by the limit; a large cycle drives a limit negative.
    let sc = write_scenario(
        dir.path(),
        "case3.json",
        serde_json::json!({
            "graph": {"n": 3, "edges": [[0, 1, 1.0], [1, 2, 1.0]]},
            "gamma": 40.0,
            "case": "III",
            "initial_limits": [1.0, 10.0, 1.0],
            "load": {"kind": "steady", "r": [5.0, 5.0, 5.0]},
            "horizon": 50
        }),
    );
    let out = dst(&["simulate", "--scenario", path_str(&sc)]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn invalid_scenario_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(dir.path(), "bad.json", serde_json::json!({"graph": {"n": 2, "edges": []}, "colour": 1}));
    assert_eq!(dst(&["simulate", "--scenario", path_str(&sc)]).status.code(), Some(1));
}
