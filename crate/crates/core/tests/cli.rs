use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_dioph-adiabatic");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("DIOPH_ADIABATIC_CONFIG")
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stderr));
    })
}

fn validator() -> jsonschema::Validator {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../schemas/report.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::draft202012::new(&schema).unwrap()
}

fn assert_valid(report: &Value) {
    let v = validator();
    let errors: Vec<String> = v.iter_errors(report).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dioph-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn solve_finds_the_witness() {
    let out = run(&["solve", "-p", "x0 - 3", "--nmax", "10", "-T", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["command"], "solve");
    assert_eq!(r["result"]["verdict"], "solution_found");
    assert_eq!(r["result"]["witnesses"], serde_json::json!([[3]]));
    assert_eq!(r["result"]["oracle_agreement"], "agrees");
    assert_valid(&r);
}

#[test]
fn solve_without_solution_exits_one() {
    let out = run(&["solve", "-p", "x0 + 1"]);
    assert_eq!(out.status.code(), Some(1));
    let r = json(&out);
    assert_eq!(r["result"]["verdict"], "no_solution_in_truncation");
    assert_valid(&r);
}

#[test]
fn malformed_input_exits_two_with_offset() {
    let out = run(&["solve", "-p", "x0 + * 3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("byte"), "{err}");

    assert_eq!(run(&["solve", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["solve", "-p", "x0", "--nmax", "1"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn every_command_validates() {
    let cases: &[&[&str]] = &[
        &["gap", "-p", "x0 - 3", "--nmax", "6", "--grid", "11"],
        &["evolve", "-p", "x0 - 2", "--nmax", "6", "--steps", "500", "--trace"],
        &["evolve", "-p", "x0 + x1 - 2", "--nmax", "4", "--alpha", "1,0.5+0.5i", "--steps", "300"],
        &["finiteness", "-p", "(x0-1)*(x0-2)", "--nmax", "8", "--steps", "2000"],
        &["omega", "-p", "x0 + x1 + p1 - 2", "--n-max", "3", "--nmax", "2"],
        &["omega", "-p", "x0 + p1 + 1", "--no-hamiltonian"],
        &["oracle", "-p", "x0 + x1 - 5"],
        &["solve", "-p", "x0*x1 - 6", "--nmax", "6", "--no-oracle", "--steps", "1000"],
    ];
    for args in cases {
        let out = run(args);
        assert!(out.status.code().is_some_and(|c| c <= 1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        let r = json(&out);
        assert_eq!(r["command"], args[0]);
        assert!(r["meta"]["version"].is_string());
        assert_valid(&r);
    }
}

#[test]
fn finiteness_reports_halt_and_regularization() {
    let out = run(&["finiteness", "-p", "(x0-1)*(x0-2)", "--no-meta"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let sweep = &r["result"]["sweep"];
    assert_eq!(sweep["verdict"], "finite_halted_at_L");
    assert_eq!(sweep["halted_at"], 3);
    let reg = &r["result"]["regularization"];
    assert_eq!(reg["verdict"], "finite_indicated");
    for p in reg["points"].as_array().unwrap() {
        assert!(p["min_energy"].as_f64().unwrap() > 0.0);
    }

    let r = json(&run(&["finiteness", "-p", "x0 + 1", "--no-meta"]));
    assert_eq!(r["result"]["sweep"]["halted_at"], 0);
}

#[test]
fn repeated_runs_are_byte_identical() {
    for args in [
        &["solve", "-p", "x0 - 3", "--seed", "5", "--no-meta"][..],
        &["gap", "-p", "(x0-2)^2", "--nmax", "6", "--no-meta"][..],
        &["evolve", "-p", "x0 - 1", "--nmax", "4", "--steps", "400", "--format", "csv", "--no-meta"][..],
    ] {
        let a = run(args);
        let b = run(args);
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
    let r = json(&run(&["solve", "-p", "x0 - 3", "--no-meta"]));
    assert!(r.get("meta").is_none());
}

#[test]
fn config_file_and_environment() {
    let cfg = scratch("solve.json", r#"{"polynomial": "x0 - 2", "nmax": 6, "seed": 9, "steps": 2000}"#);
    let out = run(&["solve", "--config", cfg.to_str().unwrap(), "--no-meta"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["config"]["polynomial"], "x0 - 2");
    assert_eq!(r["config"]["cutoffs"], serde_json::json!([6]));
    assert_eq!(r["config"]["seed"], 9);
    assert_eq!(r["result"]["witnesses"], serde_json::json!([[2]]));

    // flags win over the file, the file over defaults
    let out = Command::new(BIN)
        .args(["solve", "-p", "x0 - 4", "--seed", "1", "--no-meta"])
        .env("DIOPH_ADIABATIC_CONFIG", &cfg)
        .output()
        .unwrap();
    let r = json(&out);
    assert_eq!(r["config"]["polynomial"], "x0 - 4");
    assert_eq!(r["config"]["seed"], 1);
    assert_eq!(r["config"]["steps"], 2000);
    assert_eq!(r["result"]["witnesses"], serde_json::json!([[4]]));

    let bad = scratch("bad.json", r#"{"polynomial": "x0", "nmaks": 3}"#);
    assert_eq!(run(&["solve", "--config", bad.to_str().unwrap()]).status.code(), Some(2));

    let file = scratch("poly.txt", "vars=2\nx0*x1 - 2\n");
    let r = json(&run(&["oracle", "--poly-file", file.to_str().unwrap(), "--nmax", "3"]));
    assert_eq!(r["result"]["solution_count"], 2);
}

#[test]
fn csv_tables_have_documented_columns() {
    let header = |args: &[&str]| {
        let out = run(args);
        String::from_utf8(out.stdout).unwrap().lines().next().unwrap().to_string()
    };
    assert_eq!(header(&["gap", "-p", "x0 - 1", "--nmax", "4", "--format", "csv"]), "s,e0,e1,gap");
    assert_eq!(header(&["solve", "-p", "x0 - 1", "--nmax", "4", "--format", "csv"]), "n0,count,value,certified");
    assert_eq!(
        header(&["evolve", "-p", "x0 - 1", "--nmax", "4", "--steps", "200", "--trace", "--format", "csv"]),
        "t,s,energy"
    );
    assert_eq!(
        header(&["finiteness", "-p", "x0 + 1", "--nmax", "4", "--format", "csv"]),
        "s,i_max,min_energy,tail_bound,argmin_count"
    );
    assert_eq!(
        header(&["omega", "-p", "x0 + p1 - 2", "--format", "csv"]),
        "n,solution_count,min_square,weight,block_min"
    );
}
