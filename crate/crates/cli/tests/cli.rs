use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sskr-forge"));
    cmd.args(args).env_remove("SSKR_FORGE_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json_of(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("not one JSON document ({e}): {}", stdout(o)))
}

fn f(name: &str) -> String {
    fixture(name).to_string_lossy().into_owned()
}

fn p(path: &Path) -> String {
    path.to_string_lossy().into_owned()
}

#[test]
fn validate_exit_codes() {
    let o = run(&["validate", &f("bucky.sskr.json")]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("0 error(s)"));

    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    let text = std::fs::read_to_string(fixture("bucky.sskr.json")).unwrap().replacen("p(1,1,1)", "p(1,2,1)", 1);
    std::fs::write(&broken, text).unwrap();
    let o = run(&["--json", "validate", &p(&broken)]);
    assert_eq!(code(&o), 1);
    let v = json_of(&o);
    assert_eq!(v["valid"], false);
    assert!(v["report"]["findings"].as_array().unwrap().iter().any(|f| f["message"].as_str().unwrap().contains("(1,2)")));

    let o = run(&["--json", "validate", "no/such/file.json"]);
    assert_eq!(code(&o), 4);
    assert_eq!(json_of(&o)["ok"], false);
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let o = run(&["frobnicate"]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    let o = run(&["--json", "frobnicate"]);
    assert_eq!(code(&o), 4);
    assert_eq!(json_of(&o)["exit_code"], 4);
}

#[test]
fn missing_seed_is_a_usage_error() {
    let o = run(&["compare", &f("bucky.sskr.json"), &f("bucky.sskr.json")]);
    assert_eq!(code(&o), 4);
    let o = run(&["calibrate", &f("sir_experiment.json"), "-o", "unused"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn plan_gene_network() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("plan.json");
    let spec = dir.path().join("spec.json");
    let o = run(&[
        "plan",
        &f("gene_statements.txt"),
        "--rules",
        &f("rules.json"),
        "--ontology",
        &f("sbo.json"),
        "--goal",
        "ode",
        "--trace",
        &p(&trace),
        "-o",
        &p(&spec),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("7 step(s)"));
    let plan: Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(plan["steps"].as_array().unwrap().len(), 7);
    let spec: Value = serde_json::from_str(&std::fs::read_to_string(&spec).unwrap()).unwrap();
    assert_eq!(spec["framework"], "ode");

    let o = run(&["--json", "plan", &f("gene_statements.txt"), "--rules", &f("rules.json"), "--ontology", &f("sbo.json"), "--reachability"]);
    let v = json_of(&o);
    assert_eq!(v["steps"], 7);
    assert_eq!(v["reachability"]["ODE"]["reachable"], true);
    assert_eq!(v["reachability"]["PDE"]["missing"][0], "no spatial statements");
}

#[test]
fn plan_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let rules: Vec<Value> = serde_json::from_str(&std::fs::read_to_string(fixture("rules.json")).unwrap()).unwrap();
    let kept: Vec<&Value> = rules.iter().filter(|r| r["id"] != "R04_degrade").collect();
    let path = dir.path().join("rules.json");
    std::fs::write(&path, serde_json::to_string(&kept).unwrap()).unwrap();
    let o = run(&["--json", "plan", &f("gene_statements.txt"), "--rules", &p(&path), "--ontology", &f("sbo.json")]);
    assert_eq!(code(&o), 2);
    assert_eq!(json_of(&o)["detail"]["untransformed_statements"], serde_json::json!([4, 5]));
}

fn digest(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

#[test]
fn simulate_writes_a_trajectory_and_leaves_inputs_alone() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("traj.csv");
    let before = digest(&fixture("bucky.sskr.json"));
    let o = run(&[
        "simulate",
        &f("bucky.sskr.json"),
        "--solver",
        "rk4",
        "--dt",
        "0.01",
        "--t-end",
        "100",
        "--ic",
        &f("bucky_ic.csv"),
        "--stride",
        "100",
        "-o",
        &p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("t,S,E,Ia,Im,Ih,Rh,R,D\n"));
    assert_eq!(csv.lines().count(), 102);
    assert_eq!(digest(&fixture("bucky.sskr.json")), before);
}

#[test]
fn simulate_failures() {
    let o = run(&["--json", "simulate", &f("decay.spec.json"), "--config", &f("decay.sim.json"), "--dt", "0"]);
    assert_eq!(code(&o), 1);
    assert!(json_of(&o)["error"].as_str().unwrap().contains("dt"));
    let o = run(&["--json", "simulate", &f("decay.spec.json"), "--config", &f("decay.sim.json"), "--param", "k=-40", "--t-end", "50"]);
    assert_eq!(code(&o), 3);
    assert!(json_of(&o)["error"].as_str().unwrap().contains("blowup"));
    let o = run(&["simulate", &f("decay.spec.json"), "--dt", "0.1"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn emit_matches_golden_document() {
    let o = run(&["emit", &f("decay.spec.json"), "--config", &f("decay.sim.json")]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), std::fs::read_to_string(fixture("decay.sim.txt")).unwrap());
}

#[test]
fn extend_reproduces_the_extended_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ext.json");
    let o = run(&["extend", &f("bucky.sskr.json"), "--script", &f("bucky_icu_extension.json"), "-o", &p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let got: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let want: Value = serde_json::from_str(&std::fs::read_to_string(fixture("bucky_extended.sskr.json")).unwrap()).unwrap();
    assert_eq!(got["mrm"], want["mrm"]);
    assert_eq!(got["variables"], want["variables"]);

    let o = run(&["extend", &f("bucky.sskr.json"), "--script", &f("bucky_icu_extension.json"), "-o", &f("bucky.sskr.json")]);
    assert_eq!(code(&o), 4);
}

#[test]
fn compare_compose_decompose() {
    let o = run(&["--json", "compare", &f("bucky.sskr.json"), &f("bucky_extended.sskr.json"), "--samples", "200", "--seed", "7"]);
    assert_eq!(code(&o), 0);
    let v = json_of(&o);
    assert_eq!(v["variables_only_in_b"], serde_json::json!(["Iicu", "Ricu"]));
    let o = run(&["compare", &f("bucky.sskr.json"), &f("bucky_extended.sskr.json"), "--seed", "7"]);
    assert!(stdout(&o).contains("rows only in b: dIicu/dt, dRicu/dt"));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("both.json");
    let o = run(&["--json", "compose", &f("sir.sskr.json"), &f("hospital.sskr.json"), "--share", "I=I", "-o", &p(&out)]);
    assert_eq!(code(&o), 0);
    assert_eq!(json_of(&o)["rows"], 5);
    assert_eq!(json_of(&o)["variables"], 4);

    let out = dir.path().join("dec.json");
    let o = run(&[
        "--json",
        "decompose",
        &f("bucky.sskr.json"),
        "--param",
        "beta",
        "--sub",
        &f("beta_contact.sskr.json"),
        "--row",
        "dBc/dt",
        "-o",
        &p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert_eq!(json_of(&o)["variables"], 10);
    let o = run(&["--json", "decompose", &f("bucky.sskr.json"), "--param", "nope", "--sub", &f("beta_contact.sskr.json"), "--row", "dBc/dt", "-o", &p(&out)]);
    assert_eq!(code(&o), 1);
}

#[test]
fn calibrate_then_learn() {
    let dir = tempfile::tempdir().unwrap();
    let cal = dir.path().join("cal");
    let o = run(&["--json", "calibrate", &f("sir_experiment.json"), "--seed", "1", "-o", &p(&cal)]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(json_of(&o)["ensemble"].as_u64().unwrap() > 0);
    let first = std::fs::read_to_string(cal.join("ensemble.csv")).unwrap();
    assert!(first.starts_with("beta,gamma\n"));

    let again = dir.path().join("again");
    let o = run_env(&["calibrate", &f("sir_experiment.json"), "--seed", "1", "-o", &p(&again)], &[("SSKR_FORGE_THREADS", "3")]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read_to_string(again.join("ensemble.csv")).unwrap(), first);
    assert_eq!(std::fs::read_to_string(again.join("curve.csv")).unwrap(), std::fs::read_to_string(cal.join("curve.csv")).unwrap());

    let learn = dir.path().join("learn");
    let o = run(&["--json", "learn", &f("sir_experiment.json"), "--seed", "1", "--ensemble", &p(&cal.join("ensemble.csv")), "-o", &p(&learn)]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(learn.join("classifier.json").exists());

    let o = run(&["--json", "learn", &f("sir_experiment.json"), "--seed", "1", "-o", &p(&learn)]);
    assert_eq!(code(&o), 3);
}

#[test]
fn learn_on_the_synthetic_pool() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--json", "--threads", "2", "learn", &f("synthetic_experiment.json"), "--seed", "1", "-o", &p(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let v = json_of(&o);
    assert!(v["accuracy"].as_f64().unwrap() >= 0.9);
    assert!(v["labels_used"].as_u64().unwrap() <= 400);
    let weights: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("classifier.json")).unwrap()).unwrap();
    assert_eq!(weights["format"], "sskr-forge-mlp");
    let curve = std::fs::read_to_string(dir.path().join("accuracy.csv")).unwrap();
    assert!(curve.starts_with("round,labels_used,accuracy\n"));
}

#[test]
fn thread_settings_are_checked() {
    let o = run(&["--threads", "0", "validate", &f("bucky.sskr.json")]);
    assert_eq!(code(&o), 4);
    let o = run_env(&["--json", "validate", &f("bucky.sskr.json")], &[("SSKR_FORGE_THREADS", "many")]);
    assert_eq!(code(&o), 4);
    json_of(&o);
}

#[test]
fn seeds_in_experiment_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut exp: Value = serde_json::from_str(&std::fs::read_to_string(fixture("sir_experiment.json")).unwrap()).unwrap();
    exp["ga"]["seed"] = 5.into();
    exp["model"] = f("sir.sskr.json").into();
    for key in ["I", "R"] {
        let path = fixture(&format!("sir_{key}_envelope.csv"));
        let obs = exp["criterion"]["observables"].as_array_mut().unwrap();
        for o in obs.iter_mut().filter(|o| o["variable"] == key) {
            o["envelope"] = p(&path).into();
        }
    }
    let path = dir.path().join("exp.json");
    std::fs::write(&path, exp.to_string()).unwrap();
    let o = run(&["--json", "calibrate", &p(&path), "--seed", "1", "-o", &p(&dir.path().join("out"))]);
    assert_eq!(code(&o), 1);
    assert!(json_of(&o)["error"].as_str().unwrap().contains("--seed"));
}
