use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sskr_forge_core::cma::{self, Framework, ModelSpec, OntologyTable, Reachability, RuleSet};
use sskr_forge_core::mlme::{self, Class};
use sskr_forge_core::simkit::{self, SimConfig};
use sskr_forge_core::sskr::{self, validate, Sskr};
use sskr_forge_core::transform;

use crate::args::SimArgs;
use crate::experiment::{load_pool, Experiment};
use crate::report::{json_file, read, write, CliError, Exit, Outcome};

fn load_valid(path: &Path) -> Result<Sskr, CliError> {
    let s = sskr::load(path)?;
    let report = validate(&s);
    if report.has_errors() {
        return Err(CliError::invalid(format!("{} does not validate:\n{report}", path.display()))
            .with_detail(serde_json::to_value(&report).expect("report serializes")));
    }
    Ok(s)
}

fn save(s: &Sskr, path: &Path, inputs: &[&Path]) -> Result<(), CliError> {
    write(path, &s.to_json(), inputs)
}

pub fn validate_cmd(path: &Path) -> Result<Outcome, CliError> {
    let s = sskr::load(path)?;
    let report = validate(&s);
    let errors = report.errors().count();
    let text = format!("{}\n{report}\n", path.display());
    Ok(Outcome {
        exit: if errors > 0 { Exit::Invalid } else { Exit::Success },
        text,
        json: json!({ "valid": errors == 0, "report": report }),
    })
}

/// An SSKR model or a ModelSpec, told apart by the `mrm` key.
fn load_spec(path: &Path) -> Result<ModelSpec, CliError> {
    let text = read(path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
    if value.get("mrm").is_some() {
        let s = load_valid(path)?;
        cma::spec_from_sskr(&s).map_err(|e| CliError::invalid(e.to_string()))
    } else {
        serde_json::from_value(value).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
    }
}

fn read_initial(path: &Path) -> Result<BTreeMap<String, f64>, CliError> {
    let text = read(path)?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line == "variable,value") {
            continue;
        }
        let bad = || CliError::invalid(format!("{}:{}: expected `variable,value`", path.display(), i + 1));
        let (var, v) = line.split_once(',').ok_or_else(bad)?;
        let v: f64 = v.trim().parse().map_err(|_| bad())?;
        if out.insert(var.trim().to_string(), v).is_some() {
            return Err(CliError::invalid(format!("{}: `{}` is given twice", path.display(), var.trim())));
        }
    }
    Ok(out)
}

fn sim_config(a: &SimArgs) -> Result<(SimConfig, Vec<PathBuf>), CliError> {
    let mut inputs = Vec::new();
    let mut cfg = match &a.config {
        Some(p) => {
            inputs.push(p.clone());
            json_file::<SimConfig>(p)?
        }
        None => {
            let need = |flag: &str| CliError::usage(format!("--{flag} is required without --config"));
            let solver = a.solver.as_deref().ok_or_else(|| need("solver"))?;
            let ic = a.ic.as_ref().ok_or_else(|| need("ic"))?;
            SimConfig::new(
                solver.parse().map_err(CliError::usage)?,
                a.dt.ok_or_else(|| need("dt"))?,
                a.t_end.ok_or_else(|| need("t-end"))?,
                read_initial(ic)?,
            )
        }
    };
    if a.config.is_some() {
        if let Some(s) = &a.solver {
            cfg.solver = s.parse().map_err(CliError::usage)?;
        }
        if let Some(dt) = a.dt {
            cfg.dt = dt;
        }
        if let Some(t) = a.t_end {
            cfg.t_end = t;
        }
        if let Some(ic) = &a.ic {
            cfg.initial = read_initial(ic)?;
        }
    }
    if let Some(ic) = &a.ic {
        inputs.push(ic.clone());
    }
    cfg.params.extend(a.params.iter().cloned());
    if let Some(s) = a.stride {
        cfg.stride = s;
    }
    cfg.knockout.extend(a.knockout.iter().cloned());
    Ok((cfg, inputs))
}

pub fn simulate_cmd(model: &Path, a: &SimArgs, output: Option<&Path>) -> Result<Outcome, CliError> {
    let spec = load_spec(model)?;
    let (cfg, mut inputs) = sim_config(a)?;
    let m = simkit::compile(&spec, &cfg.params)?;
    let traj = simkit::simulate(&m, &cfg)?;
    let csv = traj.to_csv();
    inputs.push(model.to_path_buf());
    let last: serde_json::Map<String, Value> =
        traj.variables.iter().cloned().zip(traj.last().unwrap().iter().map(|&x| json!(x))).collect();
    let json = json!({ "rows": traj.len(), "output": output, "final": last });
    match output {
        Some(path) => {
            write(path, &csv, &inputs.iter().map(PathBuf::as_path).collect::<Vec<_>>())?;
            Ok(Outcome::ok(format!("wrote {} rows to {}\n", traj.len(), path.display()), json))
        }
        None => Ok(Outcome::ok(csv, json)),
    }
}

pub fn emit_cmd(model: &Path, a: &SimArgs, output: Option<&Path>) -> Result<Outcome, CliError> {
    let spec = load_spec(model)?;
    let (cfg, mut inputs) = sim_config(a)?;
    let doc = simkit::emit_simulation_document(&spec, &cfg)?;
    inputs.push(model.to_path_buf());
    match output {
        Some(path) => {
            write(path, &doc, &inputs.iter().map(PathBuf::as_path).collect::<Vec<_>>())?;
            Ok(Outcome::ok(format!("wrote {}\n", path.display()), json!({ "output": path })))
        }
        None => Ok(Outcome::ok(doc.clone(), json!({ "document": doc }))),
    }
}

pub struct PlanArgs<'a> {
    pub statements: &'a Path,
    pub rules: &'a Path,
    pub ontology: &'a Path,
    pub goal: &'a str,
    pub trace: Option<&'a Path>,
    pub output: Option<&'a Path>,
    pub reachability: bool,
}

fn reach_json(r: &Reachability) -> Value {
    match r {
        Reachability::Reachable => json!({ "reachable": true }),
        Reachability::Missing(why) => json!({ "reachable": false, "missing": why }),
    }
}

pub fn plan_cmd(a: &PlanArgs<'_>) -> Result<Outcome, CliError> {
    let goal: Framework = a.goal.parse().map_err(CliError::usage)?;
    let table = OntologyTable::from_json(&read(a.ontology)?).map_err(|e| CliError::invalid(format!("{}: {e}", a.ontology.display())))?;
    let rules = RuleSet::from_json(&read(a.rules)?).map_err(|e| CliError::invalid(format!("{}: {e}", a.rules.display())))?;
    let statements = cma::parse_statements(&read(a.statements)?, &table)
        .map_err(|(line, e)| CliError::invalid(format!("{}:{line}: {e}", a.statements.display())))?;

    let mut text = String::new();
    let mut reach = serde_json::Map::new();
    if a.reachability {
        for (fw, r) in cma::reachable_frameworks(&statements, &rules, &table) {
            match &r {
                Reachability::Reachable => writeln!(text, "{fw}: reachable").unwrap(),
                Reachability::Missing(why) => writeln!(text, "{fw}: missing ({})", why.join("; ")).unwrap(),
            }
            reach.insert(fw.to_string(), reach_json(&r));
        }
    }
    let (plan, spec) = cma::plan(&statements, &rules, &table, goal)?;
    for step in &plan.steps {
        let raw = &statements[step.statement - 1].raw;
        writeln!(text, "step {}: statement {} `{raw}` via {}", step.statement, step.statement, step.rule).unwrap();
    }
    writeln!(text, "{} step(s), {} variable(s), {} spatial", plan.steps.len(), spec.variables.len(), spec.pde.len()).unwrap();
    let inputs = [a.statements, a.rules, a.ontology];
    if let Some(p) = a.trace {
        write(p, &plan.to_json(), &inputs)?;
    }
    match a.output {
        Some(p) => write(p, &spec.to_json(), &inputs)?,
        None if !a.reachability => text.push_str(&spec.to_json()),
        None => {}
    }
    let mut json = json!({ "steps": plan.steps.len(), "digest": plan.digest, "plan": plan, "spec": spec });
    if a.reachability {
        json["reachability"] = Value::Object(reach);
    }
    Ok(Outcome::ok(text, json))
}

fn summary(s: &Sskr, path: &Path) -> (String, Value) {
    (
        format!("wrote {} ({} variables, {} rows)\n", path.display(), s.variables.len(), s.mrm.rows.len()),
        json!({ "output": path, "variables": s.variables.len(), "rows": s.mrm.rows.len() }),
    )
}

pub fn extend_cmd(model: &Path, script: &Path, output: &Path) -> Result<Outcome, CliError> {
    let s = sskr::load(model)?;
    let steps = transform::parse_script(&read(script)?).map_err(|e| CliError::invalid(format!("{}: {e}", script.display())))?;
    let out = transform::apply(&s, &steps)?;
    save(&out, output, &[model, script])?;
    let (text, json) = summary(&out, output);
    Ok(Outcome::ok(text, json))
}

pub fn decompose_cmd(model: &Path, param: &str, sub: &Path, row: &str, output: &Path) -> Result<Outcome, CliError> {
    let s = load_valid(model)?;
    let sub_model = sskr::load(sub)?;
    let out = transform::decompose_parameter(&s, param, &sub_model, row)?;
    save(&out, output, &[model, sub])?;
    let (text, json) = summary(&out, output);
    Ok(Outcome::ok(text, json))
}

pub fn compose_cmd(a: &Path, b: &Path, shared: &[(String, String)], output: &Path) -> Result<Outcome, CliError> {
    let out = transform::compose(&sskr::load(a)?, &sskr::load(b)?, shared)?;
    save(&out, output, &[a, b])?;
    let (text, json) = summary(&out, output);
    Ok(Outcome::ok(text, json))
}

pub fn compare_cmd(a: &Path, b: &Path, samples: usize, tol: f64, seed: u64) -> Result<Outcome, CliError> {
    let diff = transform::compare(&load_valid(a)?, &load_valid(b)?, samples, tol, seed);
    Ok(Outcome::ok(diff.render(), serde_json::to_value(&diff).expect("diff serializes")))
}

fn points_csv(names: &[String], points: &[Vec<f64>]) -> String {
    let mut out = names.join(",");
    out.push('\n');
    for x in points {
        let row: Vec<String> = x.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn inputs_of(exp: &Experiment, extra: &[&Path]) -> Vec<PathBuf> {
    let mut v = exp.inputs();
    v.extend(extra.iter().map(|p| p.to_path_buf()));
    v
}

pub fn calibrate_cmd(path: &Path, seed: u64, dir: &Path) -> Result<Outcome, CliError> {
    let exp = Experiment::load(path)?;
    let problem = exp.problem()?;
    let ga = exp.ga(seed)?;
    let out = mlme::ga_calibrate(&problem, &ga)?;
    let inputs = inputs_of(&exp, &[path]);
    let inputs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    write(&dir.join("ensemble.csv"), &points_csv(&problem.parameters, &out.ensemble), &inputs)?;
    let mut curve = String::from("generation,best_fitness\n");
    for (g, f) in out.curve.iter().enumerate() {
        writeln!(curve, "{g},{f:.16e}").unwrap();
    }
    write(&dir.join("curve.csv"), &curve, &inputs)?;
    let text = format!(
        "{} plausible individual(s) from {} evaluations; results in {}\n",
        out.ensemble.len(),
        out.evaluations,
        dir.display()
    );
    Ok(Outcome::ok(
        text,
        json!({ "ensemble": out.ensemble.len(), "evaluations": out.evaluations, "best_fitness": out.curve, "output": dir }),
    ))
}

pub fn learn_cmd(path: &Path, seed: u64, ensemble: Option<&Path>, dir: &Path) -> Result<Outcome, CliError> {
    let exp = Experiment::load(path)?;
    let (al, pool_spec) = exp.al(seed)?;
    let problem = if exp.has_model() { Some(exp.problem()?) } else { None };
    let pool = load_pool(&pool_spec, problem.as_ref(), seed)?;
    let seeds: Vec<Vec<f64>> = match ensemble {
        Some(p) => {
            let e = mlme::Pool::from_csv(&read(p)?)?;
            if e.names != pool.names {
                return Err(CliError::invalid(format!("ensemble columns {:?} do not match the pool {:?}", e.names, pool.names)));
            }
            e.points
        }
        None => Vec::new(),
    };
    let oracle = |i: usize| match (&pool.labels, &problem) {
        (Some(labels), _) => labels[i],
        (None, Some(p)) => p.label(&pool.points[i]),
        (None, None) => Class::Implausible,
    };
    let out = mlme::active_learn(&pool.points, &pool.bounds, &seeds, oracle, &al)?;

    let mut extra = vec![path];
    if let Some(p) = ensemble {
        extra.push(p);
    }
    let inputs = inputs_of(&exp, &extra);
    let inputs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    let mut curve = String::from("round,labels_used,accuracy\n");
    for r in &out.curve {
        writeln!(curve, "{},{},{:.16e}", r.round, r.labels_used, r.accuracy).unwrap();
    }
    write(&dir.join("accuracy.csv"), &curve, &inputs)?;
    write(&dir.join("classifier.json"), &out.classifier.to_json(), &inputs)?;
    let accuracy = out.curve.last().map_or(0.0, |r| r.accuracy);
    let text = format!(
        "{} round(s), {} oracle label(s) plus {} held out, held-out accuracy {accuracy:.4}; results in {}\n",
        out.curve.len(),
        out.labels_used,
        out.held_out_labels,
        dir.display()
    );
    Ok(Outcome::ok(
        text,
        json!({
            "rounds": out.curve,
            "labels_used": out.labels_used,
            "held_out_labels": out.held_out_labels,
            "accuracy": accuracy,
            "output": dir,
        }),
    ))
}
