use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

const GOLDEN: [&str; 6] = ["--n", "2", "--rewards", "1,0", "--cost", "linear:c0=0.25,slope=1"];

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_contest-entry"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn schema_check(doc: &Value) {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../schemas/run-record.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "schema violations: {errors:?}");
}

#[test]
fn solve_golden_instance() {
    let out = run(&[&["solve"], &GOLDEN[..]].concat());
    assert!(out.status.success(), "{}", stderr(&out));
    let doc = json(&out);
    schema_check(&doc);
    assert_eq!(doc["command"], "solve");
    assert!((doc["outputs"]["p"].as_f64().unwrap() - 0.75).abs() < 1e-12);
    assert_eq!(doc["outputs"]["regime"], "interior");
    // defaults are echoed
    assert_eq!(doc["instance"]["solver"]["residual_tol"], 1e-10);
    assert_eq!(doc["instance"]["solver"]["arg_tol"], 1e-12);
    assert_eq!(doc["instance"]["quadrature"]["panels"], 64);
}

#[test]
fn metrics_golden_instance() {
    let out = run(&[&["metrics"], &GOLDEN[..]].concat());
    assert!(out.status.success(), "{}", stderr(&out));
    let doc = json(&out);
    schema_check(&doc);
    let o = &doc["outputs"];
    assert!((o["budget"].as_f64().unwrap() - 0.9375).abs() < 1e-12);
    assert!((o["eq_max"].as_f64().unwrap() - 0.421875).abs() < 1e-8);
    assert!((o["eq_avg"].as_f64().unwrap() - 0.28125).abs() < 1e-8);
    assert!((o["W"][0].as_f64().unwrap() - 0.46875).abs() < 1e-12);
}

#[test]
fn tax_requires_wta() {
    let out = run(&["solve", "--rewards", "1,0", "--tax", "0.05", "--cost", "linear:c0=0.25,slope=1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("tax requires the wta constructor"));
}

#[test]
fn conflicting_constructors_are_usage_errors() {
    let out = run(&["solve", "--rewards", "1,0", "--wta", "1", "--n", "2", "--cost", "exp:k=1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn clap_errors_use_usage_code() {
    assert_eq!(run(&["solve", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn all_equal_rewards_in_config_are_rejected() {
    let path = scratch("equal.json");
    std::fs::write(&path, r#"{"rewards": [1, 1, 1], "cost": "linear:c0=0.25,slope=1"}"#).unwrap();
    let out = run(&["solve", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("at least one step"), "{}", stderr(&out));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let path = scratch("unknown.json");
    std::fs::write(&path, r#"{"rewards": [1, 0], "cost": "exp:k=1", "colour": "red"}"#).unwrap();
    let out = run(&["solve", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("colour"));
}

#[test]
fn flags_override_config_and_echo_round_trips() {
    let path = scratch("base.json");
    std::fs::write(&path, r#"{"n": 2, "rewards": [1, 0], "cost": "linear:c0=0.5,slope=1", "solver": {"arg_tol": 1e-13}}"#)
        .unwrap();
    let out = run(&["solve", "--config", path.to_str().unwrap(), "--cost", "linear:slope=1,c0=0.25"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc = json(&out);
    assert_eq!(doc["instance"]["cost"], "linear:c0=0.25,slope=1");
    assert_eq!(doc["instance"]["solver"]["arg_tol"], 1e-13);
    assert!((doc["outputs"]["p"].as_f64().unwrap() - 0.75).abs() < 1e-12);

    // the echo alone reproduces the run
    let echo = scratch("echo.json");
    std::fs::write(&echo, doc["instance"].to_string()).unwrap();
    let again = json(&run(&["solve", "--config", echo.to_str().unwrap()]));
    assert_eq!(again["outputs"], doc["outputs"]);
    assert_eq!(again["instance"], doc["instance"]);
}

#[test]
fn bad_cost_reports_offset() {
    let out = run(&["solve", "--rewards", "1,0", "--cost", "linear:c0=0.25,slope=abc"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("offset 21"), "{}", stderr(&out));
}

#[test]
fn verify_identities_passes() {
    let out = run(&["verify", "--suite", "identities"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc = json(&out);
    schema_check(&doc);
    assert_eq!(doc["outputs"]["passed"], true);
}

#[test]
fn tax_sweep_csv_has_constant_budget() {
    let csv = scratch("tax.csv");
    let out = run(&[
        "tax-sweep", "--n", "3", "--wta", "1", "--cost", "linear:c0=0.25,slope=1", "--taxes", "0,0.01,0.02", "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    schema_check(&json(&out));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header, ["tax", "a1", "p", "eq_max", "eq_avg", "budget", "error"]);
    let budgets: Vec<f64> = lines.map(|l| l.split(',').nth(5).unwrap().parse().unwrap()).collect();
    assert_eq!(budgets.len(), 3);
    assert!(budgets.iter().all(|b| (b - budgets[0]).abs() <= 1e-8));
}

#[test]
fn simulate_is_reproducible_across_thread_counts() {
    let args = [&["simulate", "--trials", "20000", "--seed", "7"], &GOLDEN[..]].concat();
    let a = json(&run(&[&args[..], &["--threads", "1"]].concat()));
    let b = json(&bin().args(&args).env("CONTEST_ENTRY_THREADS", "3").output().unwrap());
    schema_check(&a);
    assert_eq!(a["outputs"], b["outputs"]);
    assert_eq!(a["outputs"]["report"]["entrant_histogram"].as_array().unwrap().len(), 3);
}

#[test]
fn deviate_writes_curve_csv() {
    let csv = scratch("curve.csv");
    let out = run(&[
        &["deviate", "--trials", "5000", "--points", "5", "--csv", csv.to_str().unwrap()],
        &["--n", "2", "--rewards", "1,0.5", "--cost", "linear:c0=0.25,slope=1"][..],
    ]
    .concat());
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("q,mean_payoff,stderr,n_trials"));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn design_commands_run() {
    let lin = ["--cost", "linear:c0=0.3,slope=1"];
    let out = run(&[&["design-attention", "--caps", "1,0.5,0.4"], &lin[..]].concat());
    assert!(out.status.success(), "{}", stderr(&out));
    let doc = json(&out);
    schema_check(&doc);
    assert_eq!(doc["outputs"]["schedule"], serde_json::json!([1.0, 0.5, 0.3]));

    let out = run(&[&["perturb", "--wta", "1", "--n", "3", "--rank", "2"], &lin[..]].concat());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(json(&out)["outputs"]["d_eqmax"].as_f64().unwrap() <= 1e-8);

    let out = run(&[&["perturb", "--rewards", "1,0.6,0.1", "--rank", "3", "--kind", "sensitivity"], &lin[..]].concat());
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(json(&out)["outputs"]["sign"], "positive");

    let out = run(&[&["wta-trial", "--n", "3", "--budget", "0.8", "--trials", "20"], &lin[..]].concat());
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(json(&out)["outputs"]["violations"], 0);

    let out = run(&["avg-sign-sweep", "--n", "3", "--cost", "exp:k=1", "--budgets", "0.1,20"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc = json(&out);
    schema_check(&doc);
    assert_eq!(doc["outputs"]["sign_changes"], 1);
}

#[test]
fn sign_sweep_rejects_non_exponential_cost() {
    let out = run(&["avg-sign-sweep", "--n", "3", "--cost", "linear:c0=0.25,slope=1", "--budgets", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
}
