//! Statement parsing and annotation, rule-based planning of model
//! specifications, and specs derived from an SSKR.

mod from_sskr;
mod ontology;
mod planner;
mod rules;
mod spec;
mod statement;

pub use from_sskr::{derivative_target, spec_from_sskr, SpecError};
pub use ontology::{annotate, AnnotateError, Category, OntologyEntry, OntologyError, OntologyTable};
pub use planner::{
    digest, plan, plan_all, reachable_frameworks, replay, Plan, PlanFailure, PlanStep, Reachability, ReplayError,
    DEFAULT_PLAN_LIMIT,
};
pub use rules::{Fragment, FragmentTemplate, MappingRule, RuleError, RuleSet, RATE_PLACEHOLDER, SLOTS};
pub use spec::{is_mass_action, Derivative, Framework, ModelSpec, SpecParameter, Term, Transition};
pub use statement::{parse_statement, parse_statement_with, Entity, Statement, StatementError, Verb, LEXICON};

/// Parses one statement per non-blank line; `#` starts a comment line.
/// Entity names are matched against the table's declared terms.
pub fn parse_statements(text: &str, table: &OntologyTable) -> Result<Vec<Statement>, (usize, StatementError)> {
    let entities = table.entity_terms();
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| parse_statement_with(l, &entities).map_err(|e| (i + 1, e)))
        .collect()
}
