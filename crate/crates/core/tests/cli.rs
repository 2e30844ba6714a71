use std::path::Path;
use std::process::{Command, Output};

fn satqubo(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_satqubo")).args(args).current_dir(cwd).output().unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn pipeline_gen_transform_prune_solve() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&satqubo(&["gen", "--vars", "12", "--clauses", "40", "--count", "2", "--seed", "4", "--out", "f"], d));
    let cnf = std::fs::read_to_string(d.join("f/formula_0001.cnf")).unwrap();
    assert!(cnf.starts_with("c seed="));
    let formula = satqubo::formula::parse_dimacs(&cnf).unwrap();
    assert_eq!(formula.num_clauses(), 40);

    let stdout = ok(&satqubo(&["transform", "--method", "chancellor_repaired", "--in", "f/formula_0001.cnf", "--out", "q.qubo"], d));
    assert!(stdout.starts_with("dim 52 "));
    let (q, layout) = satqubo::qubo::parse_qubo(&std::fs::read_to_string(d.join("q.qubo")).unwrap()).unwrap();
    assert_eq!(layout.num_problem_vars, 12);

    ok(&satqubo(&["prune", "--strategy", "random", "--stage", "10", "--seed", "1", "--in", "q.qubo", "--out", "p.qubo"], d));
    let (p, _) = satqubo::qubo::parse_qubo(&std::fs::read_to_string(d.join("p.qubo")).unwrap()).unwrap();
    assert_eq!(p.nnz_offdiag(), 0);
    assert_eq!(p.diagonal(), q.diagonal());

    ok(&satqubo(
        &["solve", "--solver", "sa", "--samples", "3", "--seed", "2", "--iter", "100", "--in", "q.qubo", "--cnf", "f/formula_0001.cnf", "--out", "r.jsonl"],
        d,
    ));
    let lines: Vec<serde_json::Value> = std::fs::read_to_string(d.join("r.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 3);
    for l in &lines {
        let bits: Vec<bool> = l["bits"].as_str().unwrap().chars().map(|c| c == '1').collect();
        assert_eq!(q.energy(&bits).unwrap(), l["energy"].as_i64().unwrap());
        let a = satqubo::transform::decode(&bits, &layout).unwrap();
        assert_eq!(formula.count_satisfied(&a).unwrap() as u64, l["satisfied"].as_u64().unwrap());
    }
}

#[test]
fn search_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let stdout = ok(&satqubo(&["search", "--dim", "3", "--values", "-1,0,1", "--type", "2", "--criterion", "approx", "--out", "s"], d));
    assert_eq!(stdout.trim(), "found 4");
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("s/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["patterns"].as_array().unwrap().len(), 4);
    for entry in manifest["patterns"].as_array().unwrap() {
        let file = format!("s/{}", entry["file"].as_str().unwrap());
        ok(&satqubo(&["verify", "--pattern", &file, "--criterion", "approx"], d));
        assert_eq!(satqubo(&["verify", "--pattern", &file, "--criterion", "exact"], d).status.code(), Some(1));
    }
}

#[test]
fn experiment_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let config = r#"{
        "kind": "scaling",
        "dataset": {"count": 2, "num_vars": 15, "num_clauses": 50, "seed": 8},
        "transformations": ["fullapprox", "nuesslein"],
        "solver": {"kind": "tabu", "samples": 2, "seed": 3, "iteration_limit": 300}
    }"#;
    std::fs::write(d.join("cfg.json"), config).unwrap();
    let stdout = ok(&satqubo(&["experiment", "--config", "cfg.json", "--out", "out"], d));
    let records_path = stdout.lines().next().unwrap();
    let records = satqubo::harness::read_records(&d.join(records_path)).unwrap();
    // 2 formulas x (2 methods + baseline) x 2 samples
    assert_eq!(records.len(), 12);
    let summary = std::fs::read_to_string(d.join(stdout.lines().nth(1).unwrap())).unwrap();
    assert_eq!(summary.lines().count(), 1 + 2 * 3);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(satqubo(&["transform", "--method", "nuesslein", "--in", "missing.cnf", "--out", "x"], d).status.code(), Some(2));
    std::fs::write(d.join("bad.cnf"), "p cnf 3 1\n1 2 0\n").unwrap();
    assert_eq!(satqubo(&["transform", "--method", "nuesslein", "--in", "bad.cnf", "--out", "x"], d).status.code(), Some(1));
    std::fs::write(d.join("ok.cnf"), "p cnf 3 1\n1 2 3 0\n").unwrap();
    assert_eq!(satqubo(&["transform", "--method", "unknown", "--in", "ok.cnf", "--out", "x"], d).status.code(), Some(1));
    assert_eq!(satqubo(&["search", "--dim", "5", "--values", "0,1", "--type", "0", "--out", "s"], d).status.code(), Some(1));
    assert_eq!(satqubo(&["gen", "--vars", "2", "--clauses", "1", "--out", "g"], d).status.code(), Some(1));
    assert_eq!(satqubo(&["bogus"], d).status.code(), Some(1));
    assert_eq!(satqubo(&["--help"], d).status.code(), Some(0));
}
