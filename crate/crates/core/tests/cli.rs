use std::path::Path;
use std::process::{Command, Output};

use dpath::digraph::{Part, VertexLabel};
use dpath::gridtiling::{solve_gt_brute_force, GridTilingInstance, DEFAULT_GT_BUDGET};
use dpath::reduction::ReductionOutput;
use serde_json::Value;
use tempfile::TempDir;

/// Runs the binary in `dir` with whitespace-separated `args`.
fn dpath(dir: &Path, args: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpath"))
        .current_dir(dir)
        .env_remove("DPATH_BUDGET")
        .args(args.split_whitespace())
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn load(dir: &Path, name: &str) -> GridTilingInstance {
    GridTilingInstance::from_json(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

#[test]
fn gen_planted_is_feasible() {
    let dir = TempDir::new().unwrap();
    let o = dpath(
        dir.path(),
        "gen -k 2 -n 3 --mode planted --seed 1 -o p.json",
    );
    assert_eq!(code(&o), 0);
    let inst = load(dir.path(), "p.json");
    assert!(solve_gt_brute_force(&inst, DEFAULT_GT_BUDGET)
        .unwrap()
        .is_some());
}

#[test]
fn gen_random_zero_density_is_infeasible() {
    let dir = TempDir::new().unwrap();
    let o = dpath(
        dir.path(),
        "gen -k 2 -n 2 --mode random --density 0 -o z.json",
    );
    assert_eq!(code(&o), 0);
    assert!(
        solve_gt_brute_force(&load(dir.path(), "z.json"), DEFAULT_GT_BUDGET)
            .unwrap()
            .is_none()
    );
}

#[test]
fn gen_rejects_small_n() {
    let dir = TempDir::new().unwrap();
    let o = dpath(dir.path(), "gen -k 2 -n 1 -o x.json");
    assert_eq!(code(&o), 2);
    assert!(!dir.path().join("x.json").exists());
}

#[test]
fn reduce_reports_terminals_and_degrees() {
    let dir = TempDir::new().unwrap();
    dpath(dir.path(), "gen -k 2 -n 3 --seed 1 -o p.json");
    let o = dpath(dir.path(), "reduce p.json -o r.json");
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["terminal_pairs"], 4);
    let red =
        ReductionOutput::from_json(&std::fs::read_to_string(dir.path().join("r.json")).unwrap())
            .unwrap();
    assert_eq!(red.terminals.len(), 4);
    assert!(!red.degree_reduced);

    let o = dpath(dir.path(), "reduce p.json --degree2 -o r2.json");
    assert_eq!(code(&o), 0);
    let report = stdout_json(&o);
    assert!(report["structure"]["max_in_degree"].as_u64().unwrap() <= 2);
    assert!(report["structure"]["max_out_degree"].as_u64().unwrap() <= 2);
}

#[test]
fn reduce_full_density_has_no_dotted_edges() {
    let dir = TempDir::new().unwrap();
    dpath(
        dir.path(),
        "gen -k 2 -n 3 --mode random --density 1 -o f.json",
    );
    let o = dpath(dir.path(), "reduce f.json -o r.json");
    assert_eq!(stdout_json(&o)["structure"]["split_edges"], 0);
}

#[test]
fn roundtrip_planted_and_empty() {
    let dir = TempDir::new().unwrap();
    dpath(dir.path(), "gen -k 2 -n 3 --noise 2 --seed 3 -o p.json");
    let o = dpath(dir.path(), "roundtrip p.json --degree2");
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = stdout_json(&o);
    assert_eq!(r["gt_feasible"], true);
    assert_eq!(r["plain"]["edp_feasible"], true);
    assert_eq!(r["degree2"]["edp_feasible"], true);

    dpath(
        dir.path(),
        "gen -k 2 -n 2 --mode random --density 0 -o z.json",
    );
    let o = dpath(dir.path(), "roundtrip z.json --strategy sequential");
    assert_eq!(code(&o), 0);
    let r = stdout_json(&o);
    assert_eq!(r["gt_feasible"], false);
    assert_eq!(r["plain"]["edp_feasible"], false);
}

#[test]
fn roundtrip_is_deterministic() {
    let dir = TempDir::new().unwrap();
    dpath(
        dir.path(),
        "gen -k 2 -n 3 --mode random --density 0.6 --seed 5 -o r.json",
    );
    let a = dpath(dir.path(), "roundtrip r.json");
    let b = dpath(dir.path(), "roundtrip r.json");
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn roundtrip_corrupted_file_is_parse_error() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{\"k\": 2, \"N\":").unwrap();
    assert_eq!(code(&dpath(dir.path(), "roundtrip bad.json")), 2);
}

#[test]
fn budget_exceeded_has_its_own_code() {
    let dir = TempDir::new().unwrap();
    dpath(dir.path(), "gen -k 2 -n 3 --noise 2 --seed 3 -o p.json");
    let o = Command::new(env!("CARGO_BIN_EXE_dpath"))
        .current_dir(dir.path())
        .env("DPATH_BUDGET", "1")
        .args(["roundtrip", "p.json"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 3);
    assert_eq!(stdout_json(&o)["verdict"], "BudgetExceeded");
}

#[test]
fn export_is_byte_identical_on_repeat() {
    let dir = TempDir::new().unwrap();
    dpath(
        dir.path(),
        "gen -k 3 -n 5 --mode random --density 1 -o f.json",
    );
    dpath(dir.path(), "reduce f.json -o r.json");
    assert_eq!(
        code(&dpath(dir.path(), "export r.json --format dot -o a.dot")),
        0
    );
    dpath(dir.path(), "export r.json --format dot -o b.dot");
    let a = std::fs::read(dir.path().join("a.dot")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.dot")).unwrap());
    let dot = String::from_utf8(a).unwrap();
    // k = 3, N = 5 with full sets: 297 vertices, none split.
    assert_eq!(dot.lines().filter(|l| l.contains("pos=")).count(), 297);
    assert!(!dot.contains("dotted"));

    dpath(dir.path(), "export r.json --format json -o a.json");
    dpath(dir.path(), "export a.json --format json -o b.json");
    assert_eq!(
        std::fs::read(dir.path().join("a.json")).unwrap(),
        std::fs::read(dir.path().join("b.json")).unwrap()
    );
}

#[test]
fn export_empty_sets_doubles_every_grid_vertex() {
    let dir = TempDir::new().unwrap();
    dpath(
        dir.path(),
        "gen -k 1 -n 2 --mode random --density 0 -o z.json",
    );
    dpath(dir.path(), "reduce z.json -o r.json");
    let o = dpath(dir.path(), "export r.json --format json");
    let red = ReductionOutput::from_json(std::str::from_utf8(&o.stdout).unwrap()).unwrap();
    let whole = red
        .graph
        .labels()
        .iter()
        .filter(|l| {
            matches!(
                l,
                VertexLabel::Grid {
                    part: Part::Whole,
                    ..
                }
            )
        })
        .count();
    let parts = red
        .graph
        .labels()
        .iter()
        .filter(|l| matches!(l, VertexLabel::Grid { .. }))
        .count();
    assert_eq!((whole, parts), (0, 8));
    let dot = dpath(dir.path(), "export r.json");
    assert_eq!(
        String::from_utf8(dot.stdout)
            .unwrap()
            .matches("dotted")
            .count(),
        4
    );
}

#[test]
fn export_accepts_bare_graph() {
    let dir = TempDir::new().unwrap();
    let g = dpath::digraph::EmbeddedDigraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
    std::fs::write(dir.path().join("g.json"), g.to_json()).unwrap();
    let o = dpath(dir.path(), "export g.json --format json");
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), g.to_json());
    assert_eq!(code(&dpath(dir.path(), "export missing.json")), 2);
}

#[test]
fn sweep_parallel_and_sequential_agree() {
    let dir = TempDir::new().unwrap();
    let args = "sweep -k 1,2 -n 2 --seeds 3 --degree2";
    let par = dpath(dir.path(), args);
    let seq = dpath(dir.path(), &format!("{args} --sequential"));
    assert_eq!(code(&par), 0);
    assert_eq!(par.stdout, seq.stdout);
    assert_eq!(stdout_json(&par).as_array().unwrap().len(), 2 * (4 * 3 + 3));
}

#[test]
fn usage_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&dpath(dir.path(), "reduce")), 2);
    assert_eq!(code(&dpath(dir.path(), "export x.json --format svg")), 2);
}
