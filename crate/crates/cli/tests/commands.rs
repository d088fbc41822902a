//! End-to-end runs of the `sbpi` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn problem(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../problems")
        .join(name)
        .display()
        .to_string()
}

fn sbpi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbpi"))
        .args(args)
        .env_clear()
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Removes fields that legitimately differ between identical runs.
fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("per_node_improve_ms");
            map.remove("wall_clock");
            map.remove("report_path");
            map.values_mut().for_each(strip_timing);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

const SINGLE_ACTION: &str = "\
discount: 0.9
values: reward
states: 2
actions: 1
observations: 1
start: uniform
T: 0
identity
O: 0
uniform
R: 0 : * : * : * 1.0
";

#[test]
fn single_action_problem_converges_in_one_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("one.POMDP");
    std::fs::write(&file, SINGLE_ACTION).unwrap();
    let report = dir.path().join("r.json");
    let out = sbpi(&["solve", path_str(&file), "-q", "--report", path_str(&report)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&report);
    assert_eq!(r["iterations"].as_array().unwrap().len(), 1);
    assert_eq!(r["final"]["num_nodes"], 1);
    assert_eq!(r["final"]["termination"], "converged");
    let v = r["final"]["value_at_b0"].as_f64().unwrap();
    assert!((v - 10.0).abs() < 1e-9, "{v}");
}

#[test]
fn tiger_report_policy_and_eval_agree() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("tiger.json");
    let policy = dir.path().join("tiger.policy.json");
    let tiger = problem("tiger.95.POMDP");
    let out = sbpi(&[
        "solve",
        &tiger,
        "-q",
        "--report",
        path_str(&report),
        "--save-policy",
        path_str(&policy),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let r = read_json(&report);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["model"]["num_states"], 2);
    let iterations = r["iterations"].as_array().unwrap();
    for pair in iterations.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        assert!(b["num_nodes"].as_u64() >= a["num_nodes"].as_u64());
        let (va, vb) = (a["value_at_b0"].as_f64().unwrap(), b["value_at_b0"].as_f64().unwrap());
        assert!(vb >= va - 1e-7, "{va} -> {vb}");
    }
    let final_value = r["final"]["value_at_b0"].as_f64().unwrap();
    assert!(final_value > 19.3, "{final_value}");

    let out = sbpi(&["eval", &tiger, path_str(&policy), "--rollouts", "4000"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let e: Value = serde_json::from_slice(&out.stdout).unwrap();
    let exact = e["exact_value"].as_f64().unwrap();
    assert!((exact - final_value).abs() < 1e-9);
    assert_eq!(e["start_node"], r["final"]["start_node"]);
    let mc = &e["monte_carlo"];
    let (mean, se) = (mc["mean"].as_f64().unwrap(), mc["std_error"].as_f64().unwrap());
    let bias = mc["truncation_bias_bound"].as_f64().unwrap();
    assert!((mean - exact).abs() <= 5.0 * se + bias, "mc {mean} ± {se} vs exact {exact}");
}

#[test]
fn identical_runs_give_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| -> Value {
        let report = dir.path().join(name);
        let out = sbpi(&["solve", "random:5,3,3", "--seed", "9", "--max-nodes", "20", "-q", "--report", path_str(&report)]);
        assert!(matches!(out.status.code(), Some(0 | 2)));
        let mut v = read_json(&report);
        strip_timing(&mut v);
        v
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn hallway_parameter_count_at_fifty_nodes() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("hallway.json");
    let out = sbpi(&[
        "solve",
        &problem("hallway.POMDP"),
        "--mode",
        "sparse",
        "--max-nodes",
        "50",
        "--max-sweeps",
        "3",
        "-q",
        "--report",
        path_str(&report),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&report);
    assert_eq!(r["final"]["num_nodes"], 50);
    assert_eq!(r["final"]["termination"], "node-cap");
    assert_eq!(r["final"]["sparsity"]["total_params_per_node"], 5255);
}

#[test]
fn generated_problem_round_trips_through_solve() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("gen.POMDP");
    let out = sbpi(&[
        "gen", "--states", "6", "--actions", "3", "--observations", "4", "--discount", "0.9", "--seed", "3", "-o",
        path_str(&file),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = dir.path().join("gen.json");
    let out = sbpi(&["solve", path_str(&file), "--max-nodes", "15", "-q", "--report", path_str(&report)]);
    assert!(matches!(out.status.code(), Some(0 | 2)), "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&report);
    assert_eq!(r["model"]["num_states"], 6);
    assert_eq!(r["model"]["num_actions"], 3);
    assert_eq!(r["model"]["num_observations"], 4);
    assert_eq!(r["model"]["discount"], 0.9);
}

#[test]
fn dump_lp_writes_the_full_node_program() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("node.lp");
    let out = sbpi(&["dump-lp", &problem("tiger.95.POMDP"), "--node", "0", "-o", path_str(&file)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&file).unwrap();
    let start = text.find("Subject To\n").unwrap();
    let end = text.find("Bounds\n").unwrap();
    // 2 improvement rows, 1 normalization row, 3 × 2 outlet rows.
    let rows = text[start..end].lines().filter(|l| l.contains(':')).count();
    assert_eq!(rows, 9, "{}", &text[start..end]);
    assert!(text.ends_with("End\n"));

    let out = sbpi(&["dump-lp", &problem("tiger.95.POMDP"), "--node", "7", "-o", path_str(&file)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bench_compare_emits_a_row_per_rung() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("bench.json");
    let out = sbpi(&[
        "bench-compare",
        "random:4,3,2",
        "--seed",
        "1",
        "--ladder",
        "10,5",
        "--sweeps",
        "1",
        "--report",
        path_str(&report),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&report);
    let rows = r["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    let sizes: Vec<u64> = rows.iter().map(|row| row["num_nodes"].as_u64().unwrap()).collect();
    assert!(sizes[0] <= sizes[1]);
    for row in rows {
        assert!(row["full_ms"].as_f64().unwrap() > 0.0);
        assert!(row["sparse_ms"].as_f64().unwrap() > 0.0);
        assert!(row["max_epsilon_difference"].as_f64().unwrap() < 1e-6);
        let n = row["num_nodes"].as_u64().unwrap();
        assert_eq!(row["full_lp_variables"].as_u64().unwrap(), 1 + 3 + 3 * 2 * n);
    }
}

#[test]
fn errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.POMDP");
    std::fs::write(&bad, "discount: 2.0\nstates: 2\n").unwrap();
    let out = sbpi(&["solve", path_str(&bad), "-q", "--report", path_str(&dir.path().join("r.json"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());

    let missing: PathBuf = dir.path().join("missing.POMDP");
    let out = sbpi(&["solve", path_str(&missing), "-q"]);
    assert_eq!(out.status.code(), Some(1));

    let policy = dir.path().join("p.json");
    std::fs::write(&policy, "{\"nodes\": []}").unwrap();
    let out = sbpi(&["eval", &problem("tiger.95.POMDP"), path_str(&policy)]);
    assert_eq!(out.status.code(), Some(1));
}

fn schema(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/schemas").join(name);
    jsonschema::validator_for(&read_json(&path)).expect("schema compiles")
}

fn assert_conforms(validator: &jsonschema::Validator, doc: &Value) {
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

#[test]
fn outputs_conform_to_published_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let policy = dir.path().join("p.json");
    let bench = dir.path().join("b.json");
    for mode in ["full", "sparse", "sparse-early"] {
        let out = sbpi(&[
            "solve",
            "random:5,3,2",
            "--seed",
            "4",
            "--mode",
            mode,
            "--gap-tolerance",
            "0.01",
            "--max-nodes",
            "12",
            "-q",
            "--report",
            path_str(&report),
            "--save-policy",
            path_str(&policy),
        ]);
        assert!(matches!(out.status.code(), Some(0 | 2)), "{}", String::from_utf8_lossy(&out.stderr));
        assert_conforms(&schema("run-report.schema.json"), &read_json(&report));
        assert_conforms(&schema("policy.schema.json"), &read_json(&policy));
    }
    let out = sbpi(&[
        "bench-compare", "random:4,3,2", "--ladder", "6", "--sweeps", "1", "--clock", "cpu", "--report",
        path_str(&bench),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_conforms(&schema("bench-report.schema.json"), &read_json(&bench));

    // The schemas are strict enough to catch a stray field.
    let mut doc = read_json(&report);
    doc["final"]["extra"] = Value::Bool(true);
    assert!(!schema("run-report.schema.json").is_valid(&doc));
}
