//! Breadth-first planning over mapping rules.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::ontology::{annotate, OntologyTable};
use super::rules::{Fragment, MappingRule, RuleSet, RATE_PLACEHOLDER};
use super::spec::{Derivative, Framework, ModelSpec, SpecParameter, Term, Transition};
use super::statement::Statement;
use crate::expr::Leaf;

/// Default bound on the number of alternative plans returned by [`plan_all`].
pub const DEFAULT_PLAN_LIMIT: usize = 16;

/// Bound on explored search states.
const STATE_LIMIT: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    /// 1-based statement index.
    pub statement: usize,
    pub rule: String,
    pub fragments: Vec<Fragment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub goal: Framework,
    pub digest: String,
    pub steps: Vec<PlanStep>,
}

impl Plan {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("plan serializes");
        text.push('\n');
        text
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum PlanFailure {
    /// 1-based indices of statements no rule transforms.
    UntransformedStatements(Vec<usize>),
    UnreachableFrameworks(BTreeMap<Framework, Vec<String>>),
}

impl std::fmt::Display for PlanFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlanFailure::UntransformedStatements(ix) => {
                let ix: Vec<String> = ix.iter().map(|i| i.to_string()).collect();
                write!(f, "no mapping rule transforms statement(s) {}", ix.join(", "))
            }
            PlanFailure::UnreachableFrameworks(map) => {
                let parts: Vec<String> = map.iter().map(|(fw, why)| format!("{fw}: {}", why.join("; "))).collect();
                write!(f, "goal not reachable ({})", parts.join(" | "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", content = "missing", rename_all = "snake_case")]
pub enum Reachability {
    Reachable,
    Missing(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReplayError {
    #[error("statement digest mismatch (plan {expected}, statements {found})")]
    DigestMismatch { expected: String, found: String },
    #[error("rule `{0}` is not in the rule set")]
    RuleMissing(String),
    #[error("plan step {0} names a statement outside the list")]
    BadStep(usize),
}

/// SHA-256 over the statement texts in order.
pub fn digest(statements: &[Statement]) -> String {
    let mut h = Sha256::new();
    for st in statements {
        h.update(st.raw.as_bytes());
        h.update(b"\n");
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

const ABM_MISSING: &str = "ABM generation not implemented";
const NO_SPACE: &str = "no spatial statements";

/// Per statement: rules that apply for `goal`, or why none does.
fn options<'r>(
    statements: &[Statement],
    rules: &'r RuleSet,
    table: &OntologyTable,
    goal: Framework,
) -> Vec<Result<(Statement, Vec<&'r MappingRule>), String>> {
    statements
        .iter()
        .map(|st| {
            let st = annotate(st, table).map_err(|e| e.to_string())?;
            let fits: Vec<&MappingRule> = rules.iter().filter(|r| r.matches(&st) && r.admitted_by(goal)).collect();
            if fits.is_empty() {
                Err(format!("no {goal} mapping rule"))
            } else {
                Ok((st, fits))
            }
        })
        .collect()
}

fn unmet(goal: Framework, steps: &[PlanStep]) -> Vec<String> {
    match goal {
        Framework::Abm => vec![ABM_MISSING.to_string()],
        Framework::Pde if !steps.is_empty() && !steps.iter().any(|s| s.fragments.iter().any(|f| f.term.contains_laplacian())) => {
            vec![NO_SPACE.to_string()]
        }
        _ => Vec::new(),
    }
}

/// Every complete plan in breadth-first order, at most `limit` of them.
/// Statements are transformed in index order; each statement's candidate
/// rules are tried in ascending id order.
pub fn plan_all(
    statements: &[Statement],
    rules: &RuleSet,
    table: &OntologyTable,
    goal: Framework,
    limit: usize,
) -> Result<Vec<(Plan, ModelSpec)>, PlanFailure> {
    let digest = digest(statements);
    if goal == Framework::Abm {
        return Err(PlanFailure::UnreachableFrameworks(BTreeMap::from([(goal, vec![ABM_MISSING.to_string()])])));
    }
    let opts = options(statements, rules, table, goal);
    let stuck: Vec<usize> = opts.iter().enumerate().filter(|(_, o)| o.is_err()).map(|(i, _)| i + 1).collect();
    if !stuck.is_empty() {
        return Err(PlanFailure::UntransformedStatements(stuck));
    }
    let opts: Vec<(Statement, Vec<&MappingRule>)> = opts.into_iter().map(Result::unwrap).collect();

    let mut found = Vec::new();
    let mut missing = BTreeSet::new();
    let mut queue: VecDeque<Vec<PlanStep>> = VecDeque::from([Vec::new()]);
    let mut explored = 0usize;
    while let Some(steps) = queue.pop_front() {
        explored += 1;
        let depth = steps.len();
        if depth == opts.len() {
            let why = unmet(goal, &steps);
            if why.is_empty() {
                let plan = Plan { goal, digest: digest.clone(), steps };
                let spec = assemble(&plan);
                found.push((plan, spec));
                if found.len() >= limit.max(1) {
                    break;
                }
            } else {
                missing.extend(why);
            }
            continue;
        }
        if explored > STATE_LIMIT {
            missing.insert(format!("search stopped after {STATE_LIMIT} states"));
            break;
        }
        let (st, fits) = &opts[depth];
        for rule in fits {
            let mut next = steps.clone();
            next.push(PlanStep { statement: depth + 1, rule: rule.id.clone(), fragments: rule.instantiate(st, depth + 1) });
            queue.push_back(next);
        }
    }
    if found.is_empty() {
        return Err(PlanFailure::UnreachableFrameworks(BTreeMap::from([(goal, missing.into_iter().collect())])));
    }
    Ok(found)
}

/// The first plan under the (statement index, rule id) tie-break.
pub fn plan(
    statements: &[Statement],
    rules: &RuleSet,
    table: &OntologyTable,
    goal: Framework,
) -> Result<(Plan, ModelSpec), PlanFailure> {
    plan_all(statements, rules, table, goal, 1).map(|mut all| all.swap_remove(0))
}

/// Rebuilds the spec from the rules the plan names.
pub fn replay(plan: &Plan, statements: &[Statement], rules: &RuleSet) -> Result<ModelSpec, ReplayError> {
    let found = digest(statements);
    if found != plan.digest {
        return Err(ReplayError::DigestMismatch { expected: plan.digest.clone(), found });
    }
    let mut steps = Vec::with_capacity(plan.steps.len());
    for (i, step) in plan.steps.iter().enumerate() {
        let rule = rules.get(&step.rule).ok_or_else(|| ReplayError::RuleMissing(step.rule.clone()))?;
        let st = statements.get(step.statement.wrapping_sub(1)).ok_or(ReplayError::BadStep(i + 1))?;
        steps.push(PlanStep { statement: step.statement, rule: step.rule.clone(), fragments: rule.instantiate(st, i + 1) });
    }
    Ok(assemble(&Plan { goal: plan.goal, digest: plan.digest.clone(), steps }))
}

fn trace_id(plan: &Plan) -> String {
    let mut h = Sha256::new();
    h.update(plan.digest.as_bytes());
    for step in &plan.steps {
        h.update(format!("\n{}:{}", step.statement, step.rule).as_bytes());
    }
    h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn assemble(plan: &Plan) -> ModelSpec {
    let mut spec = ModelSpec::empty("plan", plan.goal);
    let mut terms: BTreeMap<String, Vec<Term>> = BTreeMap::new();
    for (i, step) in plan.steps.iter().enumerate() {
        let fresh = format!("{RATE_PLACEHOLDER}{}", i + 1);
        let origin = format!("{} (statement {})", step.rule, step.statement);
        let mut uses_fresh = false;
        for f in &step.fragments {
            let mut add = |name: &str| {
                if !spec.variables.iter().any(|v| v == name) {
                    spec.variables.push(name.to_string());
                }
            };
            add(&f.target);
            for leaf in f.term.free_symbols() {
                if let Leaf::Sym(s) = leaf {
                    if s == fresh {
                        uses_fresh = true;
                    } else if s != "t" {
                        add(&s);
                    }
                }
            }
            terms.entry(f.target.clone()).or_default().push(Term { expr: f.term.clone(), origin: origin.clone() });
        }
        if uses_fresh {
            spec.parameters.push(SpecParameter { id: fresh, value: None });
        }
        if plan.goal == Framework::PetriNet {
            spec.transitions.push(Transition {
                label: origin.clone(),
                terms: step.fragments.iter().map(|f| Term { expr: f.term.clone(), origin: f.target.clone() }).collect(),
            });
        }
    }
    for v in &spec.variables {
        if let Some(ts) = terms.remove(v) {
            if ts.iter().any(|t| t.expr.contains_laplacian()) {
                spec.pde.insert(v.clone());
            }
            spec.derivatives.push(Derivative { variable: v.clone(), terms: ts });
        }
    }
    spec.trace = Some(trace_id(plan));
    spec
}

/// Planning outcome for every registered framework.
pub fn reachable_frameworks(
    statements: &[Statement],
    rules: &RuleSet,
    table: &OntologyTable,
) -> BTreeMap<Framework, Reachability> {
    Framework::ALL
        .iter()
        .map(|&fw| {
            let verdict = match plan(statements, rules, table, fw) {
                Ok(_) => Reachability::Reachable,
                Err(PlanFailure::UnreachableFrameworks(map)) => Reachability::Missing(map.into_values().flatten().collect()),
                Err(PlanFailure::UntransformedStatements(_)) => Reachability::Missing(
                    options(statements, rules, table, fw)
                        .into_iter()
                        .zip(statements)
                        .enumerate()
                        .filter_map(|(i, (o, st))| o.err().map(|why| format!("statement {} `{}`: {why}", i + 1, st.raw)))
                        .collect(),
                ),
            };
            (fw, verdict)
        })
        .collect()
}
