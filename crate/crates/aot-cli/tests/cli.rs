//! End-to-end tests of the `adapted-ot` binary and the command library:
//! every exactly computable output is recomputed through the library API.

use std::path::PathBuf;
use std::process::Command;

use aot_cli::{csv_header_comment, parse_tree, run_from_args};
use aot_coupling::EpsShift;
use aot_generators::{counterexample_pair, figure1_pair, random_walk_tree};
use aot_solvers::{aw, cw, eps_bicausal_lp, hellwig, nested_bicausal, scw, wasserstein, SolverOptions};
use aot_stopping::{aldous_functional, brute_force_os, snell_os, CostFunction, Psi, Variant};
use serde_json::Value;

fn run(args: &[&str]) -> String {
    let mut out = Vec::new();
    let mut full = vec!["adapted-ot"];
    full.extend_from_slice(args);
    run_from_args(full, &mut out).unwrap_or_else(|e| panic!("{args:?}: {e}"));
    String::from_utf8(out).unwrap()
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&run(args)).unwrap()
}

fn value(v: &Value) -> f64 {
    v["value"].as_f64().unwrap()
}

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn binary(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_adapted-ot")).args(args).output().unwrap()
}

/// Parses CSV output (after the version comment) into header and rows.
fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), csv_header_comment());
    let rest: String = lines.map(|l| format!("{l}\n")).collect();
    let mut r = csv::Reader::from_reader(rest.as_bytes());
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect();
    (header, rows)
}

#[test]
fn dist_two_scenario_pair_values() {
    let args = |kind| vec!["dist", "--left", "fig1:P", "--right", "fig1:Pe(0.1)", "--kind", kind, "--p", "1"];
    assert!((value(&json(&args("aw"))) - 0.6).abs() < 1e-9);
    assert!((value(&json(&args("w"))) - 0.1).abs() < 1e-9);
    assert!((value(&json(&args("aw_strict"))) - 1.05).abs() < 1e-9);
    assert!(value(&json(&args("w"))) <= value(&json(&args("aw"))) + 1e-12);
    let report = json(&args("aw"));
    assert_eq!(report["kind"], "aw");
    assert!(report.get("coupling").is_none());
}

#[test]
fn dist_matches_library_for_every_kind() {
    let (x, y) = figure1_pair(0.2).unwrap();
    let o = SolverOptions { keep_witness: false, ..SolverOptions::order(2.0) };
    let expected = [
        ("w", wasserstein(&x, &y, &o).unwrap().value),
        ("cw", cw(&x, &y, &o).unwrap().value),
        ("scw", scw(&x, &y, &o).unwrap().value),
        ("aw", aw(&x, &y, &o).unwrap().value),
        ("aw_strict", nested_bicausal(&x, &y, &o).unwrap().value),
        ("hellwig", hellwig(&x, &y, &o).unwrap().value),
        ("eps_lp", eps_bicausal_lp(&x, &y, EpsShift::zero(), &o).unwrap().value),
    ];
    for (kind, v) in expected {
        let got = value(&json(&["dist", "--left", "fig1:P", "--right", "fig1:Pe(0.2)", "--kind", kind, "--p", "2"]));
        assert_eq!(got, v, "{kind}");
    }
    let shifted = eps_bicausal_lp(&x, &y, EpsShift::time(0.5).unwrap(), &o).unwrap().value;
    let got = json(&["dist", "--left", "fig1:P", "--right", "fig1:Pe(0.2)", "--kind", "eps_lp", "--eps", "0.5", "--p", "2"]);
    assert_eq!(value(&got), shifted);
}

#[test]
fn dist_from_files_and_witness() {
    let path = tmp("rw3.json");
    std::fs::write(&path, random_walk_tree(3).unwrap().to_json()).unwrap();
    let p = path.to_str().unwrap();
    let r = json(&["dist", "--left", p, "--right", p, "--kind", "aw_strict", "--p", "2", "--emit-witness"]);
    assert!(value(&r).abs() < 1e-12);
    let w = r["coupling"].as_array().unwrap();
    assert_eq!(w.len(), 8);
    let total: f64 = w.iter().flat_map(|row| row.as_array().unwrap()).map(|c| c.as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn os_examples() {
    let r = json(&["os", "--tree", "counterexample:n=4,m=8", "--phi", "state:identity", "--variant", "sup"]);
    let (xn, _) = counterexample_pair(4, 8).unwrap();
    let lib = snell_os(&xn, &CostFunction::state(Psi::Identity), Variant::Sup).unwrap().value;
    assert_eq!(value(&r), lib);
    assert!((lib - 0.375).abs() < 1e-12);

    let r = json(&["os", "--tree", "rw:n=3", "--phi", "state:identity", "--emit-rule"]);
    let rw = random_walk_tree(3).unwrap();
    let brute = brute_force_os(&rw, &CostFunction::state(Psi::Identity), Variant::Inf).unwrap();
    assert!((value(&r) - brute).abs() < 1e-12);
    let rule = r["rule"].as_array().unwrap();
    assert_eq!(rule.len(), 4);
    assert_eq!(rule[3].as_array().unwrap().len(), 8);

    // a constant process: the cost of the constant
    let path = tmp("const.json");
    let grid = aot_core::TimeGrid::uniform(3);
    let tree = aot_core::FilteredTree::deterministic(grid, &vec![vec![0.7]; 4]).unwrap();
    std::fs::write(&path, tree.to_json()).unwrap();
    for phi in ["state:identity", "state:call(0.5)", "terminal:put(1)", "running-max:abs"] {
        let r = json(&["os", "--tree", path.to_str().unwrap(), "--phi", phi]);
        let expect = match phi {
            "state:call(0.5)" => 0.2,
            "terminal:put(1)" => 0.3,
            _ => 0.7,
        };
        assert!((value(&r) - expect).abs() < 1e-12, "{phi}");
    }
}

#[test]
fn topology_table_cells_match_library() {
    let text = run(&["topology-table", "--pair", "fig1", "--ladder", "0.2,0.1,0.05"]);
    let (header, rows) = csv_rows(&text);
    assert_eq!(
        header,
        [
            "param",
            "w",
            "cw_xy",
            "cw_yx",
            "scw",
            "aw",
            "aw_strict",
            "hellwig",
            "os_gap:state:identity",
            "os_gap:running-max:identity",
            "aldous_gap"
        ]
    );
    assert_eq!(rows.len(), 3);
    let o = SolverOptions { keep_witness: false, ..SolverOptions::default() };
    let state = CostFunction::state(Psi::Identity);
    let runmax = CostFunction::running_max(Psi::Identity);
    let mut prev_w = f64::INFINITY;
    for (row, e) in rows.iter().zip([0.2, 0.1, 0.05]) {
        let (x, y) = figure1_pair(e).unwrap();
        let gap = |phi: &CostFunction| {
            (snell_os(&x, phi, Variant::Sup).unwrap().value - snell_os(&y, phi, Variant::Sup).unwrap().value).abs()
        };
        let expected = [
            e,
            wasserstein(&x, &y, &o).unwrap().value,
            cw(&x, &y, &o).unwrap().value,
            cw(&y, &x, &o).unwrap().value,
            scw(&x, &y, &o).unwrap().value,
            aw(&x, &y, &o).unwrap().value,
            nested_bicausal(&x, &y, &o).unwrap().value,
            hellwig(&x, &y, &o).unwrap().value,
            gap(&state),
            gap(&runmax),
            (aldous_functional(&x) - aldous_functional(&y)).abs(),
        ];
        let got: Vec<f64> = row.iter().map(|c| c.parse().unwrap()).collect();
        assert_eq!(got, expected);
        // the plain distance vanishes with the gap, the adapted one does not
        assert!(got[1] < prev_w);
        prev_w = got[1];
        assert!(got[5] >= 0.5);
    }
}

#[test]
fn topology_table_counterexample_and_self_rows() {
    let text = run(&["topology-table", "--pair", "counterexample", "--ladder", "2,4", "--m", "8", "--phi", "state:identity"]);
    let (_, rows) = csv_rows(&text);
    let o = SolverOptions { keep_witness: false, ..SolverOptions::default() };
    for (row, n) in rows.iter().zip([2usize, 4]) {
        let (xn, x) = counterexample_pair(n, 8).unwrap();
        let got: Vec<f64> = row.iter().map(|c| c.parse().unwrap()).collect();
        assert_eq!(got[0], n as f64);
        assert_eq!(got[5], aw(&xn, &x, &o).unwrap().value);
        assert_eq!(got[6], nested_bicausal(&xn, &x, &o).unwrap().value);
        assert!((got[8] - 0.5 * (1.0 - 1.0 / n as f64)).abs() < 1e-12);
        assert_eq!(got[9], aldous_functional(&xn) - aldous_functional(&x));
    }
    let text = run(&["topology-table", "--pair", "self", "--tree", "bm:n=2,m=2"]);
    let (_, rows) = csv_rows(&text);
    assert_eq!(rows.len(), 1);
    assert!(rows[0].iter().skip(1).all(|c| c.parse::<f64>().unwrap().abs() < 1e-12), "{rows:?}");
}

#[test]
fn monte_carlo_ladders_are_reproducible() {
    let args = ["donsker", "--n", "4,8,16", "--eps", "1,0.5", "--samples", "300", "--seed", "7"];
    let a = run(&args);
    assert_eq!(a, run(&args));
    let (header, rows) = csv_rows(&a);
    assert_eq!(header, ["record", "n", "eps", "value", "std_error", "samples", "seed"]);
    let kinds: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(kinds.iter().filter(|k| **k == "estimate").count(), 6);
    assert_eq!(kinds.iter().filter(|k| **k == "proxy").count(), 3);
    assert_eq!(&kinds[9..], ["fit_constant", "proxy_slope"]);
    assert!(rows.iter().filter(|r| r[0] == "estimate").all(|r| r[6] == "7" && r[5] == "300"));
    // the proxy is the minimum of estimate + eps
    for n in ["4", "8", "16"] {
        let best = rows
            .iter()
            .filter(|r| r[0] == "estimate" && r[1] == n)
            .map(|r| r[3].parse::<f64>().unwrap() + r[2].parse::<f64>().unwrap())
            .fold(f64::INFINITY, f64::min);
        let proxy = rows.iter().find(|r| r[0] == "proxy" && r[1] == n).unwrap();
        assert_eq!(proxy[3].parse::<f64>().unwrap(), best);
    }

    let args = ["euler", "--n", "8,16", "--samples", "200", "--mu", "-x", "--sigma", "1+0.5*clip(x,-1,1)"];
    let a = run(&args);
    assert_eq!(a, run(&args));
    let (header, rows) = csv_rows(&a);
    assert_eq!(header, ["record", "n", "value", "std_error", "samples", "seed"]);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[2][0], "slope");
    assert!(rows[..2].iter().all(|r| r[5] == "42"));
}

#[test]
fn threads_do_not_change_results() {
    let args = ["topology-table", "--pair", "fig1", "--ladder", "0.3,0.1"];
    let one = run(&[&args[..], &["--threads", "1"]].concat());
    let two = run(&[&args[..], &["--threads", "2"]].concat());
    assert_eq!(one, two);
}

#[test]
fn experiment_record_is_written() {
    let path = tmp("record.json");
    let p = path.to_str().unwrap();
    run(&["dist", "--left", "fig1:P", "--right", "fig1:Pe(0.1)", "--record", p]);
    let rec: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(rec["experiment"], "dist");
    assert_eq!(rec["seed"], 42);
    assert_eq!(rec["version"], aot_cli::VERSION);
    assert!((rec["outputs"]["value"].as_f64().unwrap() - 0.6).abs() < 1e-9);
    assert_eq!(rec["parameters"]["kind"], "aw");
}

#[test]
fn generator_specs_match_library() {
    assert!(parse_tree("rw:n=4").unwrap().isomorphic(&random_walk_tree(4).unwrap(), 0.0));
    let (xn, x) = counterexample_pair(3, 6).unwrap();
    assert!(parse_tree("counterexample:n=3,m=6").unwrap().isomorphic(&xn, 0.0));
    assert!(parse_tree("counterexample-limit:m=6").unwrap().isomorphic(&x, 0.0));
}

#[test]
fn generate_round_trips_through_files() {
    let text = run(&["generate", "fig1:Pe(0.1)"]);
    let tree = aot_core::FilteredTree::from_json(&text).unwrap();
    assert!(tree.isomorphic(&figure1_pair(0.1).unwrap().1, 0.0));
    let path = tmp("pe.json");
    std::fs::write(&path, &text).unwrap();
    assert_eq!(run(&["generate", path.to_str().unwrap()]), text);
}

#[test]
fn exit_codes() {
    let ok = binary(&["dist", "--left", "fig1:P", "--right", "fig1:Pe(0.1)"]);
    assert_eq!(ok.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert!((value(&v) - 0.6).abs() < 1e-9);

    let missing = binary(&["dist", "--left", "/nonexistent/a.json", "--right", "rw:n=2"]);
    assert_eq!(missing.status.code(), Some(1));

    let garbled = tmp("garbled.json");
    std::fs::write(&garbled, "{ not json").unwrap();
    let bad_json = binary(&["os", "--tree", garbled.to_str().unwrap()]);
    assert_eq!(bad_json.status.code(), Some(1));

    // well-formed JSON, but the probabilities do not sum to one
    let invalid = tmp("invalid.json");
    let text = random_walk_tree(1).unwrap().to_json().replacen("0.5", "0.75", 1);
    std::fs::write(&invalid, text).unwrap();
    let out = binary(&["os", "--tree", invalid.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("validation failed"));

    assert_eq!(binary(&["dist", "--left", "rw:n=2", "--right", "rw:n=2", "--p", "0.5"]).status.code(), Some(2));
    assert_eq!(binary(&["os", "--tree", "rw:n=2", "--phi", "bogus"]).status.code(), Some(2));
    assert_eq!(binary(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(binary(&["--help"]).status.code(), Some(0));
}
