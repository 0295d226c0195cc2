//! Mapping rules from annotated statements to spec fragments.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::spec::{is_mass_action, Framework};
use super::statement::Statement;
use crate::expr::{Expr, Leaf};

/// Slot names: the subject, then up to three objects.
pub const SLOTS: [&str; 4] = ["X", "Y", "Z", "W"];

/// Placeholder replaced by a fresh rate constant on each application.
pub const RATE_PLACEHOLDER: &str = "k";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FragmentTemplate {
    pub var_slot: String,
    pub expr_template: Expr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingRule {
    pub id: String,
    pub process_code: String,
    pub subject_category: String,
    #[serde(default)]
    pub object_categories: Vec<String>,
    pub framework: Framework,
    pub fragments: Vec<FragmentTemplate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fragment {
    pub target: String,
    pub term: Expr,
}

impl MappingRule {
    fn slots(&self) -> &[&'static str] {
        &SLOTS[..(1 + self.object_categories.len()).min(SLOTS.len())]
    }

    /// Pattern match on the process code and entity classes.
    pub fn matches(&self, st: &Statement) -> bool {
        st.process_code.as_deref() == Some(self.process_code.as_str())
            && st.subject.classes.contains(&self.subject_category)
            && st.objects.len() == self.object_categories.len()
            && st.objects.iter().zip(&self.object_categories).all(|(o, c)| o.classes.contains(c))
    }

    /// Binds slots to the statement's entities; `k` becomes `k<step>`.
    pub fn instantiate(&self, st: &Statement, step: usize) -> Vec<Fragment> {
        let bound: Vec<String> = st.entities().map(|e| e.symbol()).collect();
        let fresh = format!("{RATE_PLACEHOLDER}{step}");
        let lookup = |name: &str| {
            if name == RATE_PLACEHOLDER {
                return Some(Expr::sym(&fresh));
            }
            SLOTS.iter().position(|s| *s == name).and_then(|i| bound.get(i)).map(Expr::sym)
        };
        self.fragments
            .iter()
            .map(|f| {
                let i = SLOTS.iter().position(|s| *s == f.var_slot).expect("validated slot");
                Fragment { target: bound[i].clone(), term: f.expr_template.substitute(&lookup) }
            })
            .collect()
    }

    /// Whether fragments from this rule may enter a spec for `goal`.
    pub fn admitted_by(&self, goal: Framework) -> bool {
        match goal {
            Framework::Ode => self.framework == Framework::Ode,
            Framework::Pde => matches!(self.framework, Framework::Ode | Framework::Pde),
            Framework::PetriNet => {
                self.framework == Framework::PetriNet
                    || (self.framework == Framework::Ode
                        && self.fragments.iter().all(|f| is_mass_action(&f.expr_template)))
            }
            Framework::Abm => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuleError {
    #[error("rule file: {0}")]
    Json(String),
    #[error("rule id `{0}` appears twice")]
    DuplicateId(String),
    #[error("rule `{rule}`: {reason}")]
    Invalid { rule: String, reason: String },
}

/// Rules kept in ascending id order, which is the planner's tie-break.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
#[serde(transparent)]
pub struct RuleSet {
    rules: Vec<MappingRule>,
}

fn check(rule: &MappingRule) -> Result<(), String> {
    if rule.object_categories.len() >= SLOTS.len() {
        return Err(format!("at most {} objects are supported", SLOTS.len() - 1));
    }
    if rule.fragments.is_empty() {
        return Err("no fragments".into());
    }
    let slots = rule.slots();
    for f in &rule.fragments {
        if !slots.contains(&f.var_slot.as_str()) {
            return Err(format!("target slot `{}` is not bound by the pattern", f.var_slot));
        }
        for leaf in f.expr_template.free_symbols() {
            match leaf {
                Leaf::Sym(s) if s == RATE_PLACEHOLDER || slots.contains(&s.as_str()) => {}
                other => return Err(format!("template `{}` uses unbound `{other}`", f.expr_template)),
            }
        }
    }
    Ok(())
}

impl RuleSet {
    pub fn new(mut rules: Vec<MappingRule>) -> Result<RuleSet, RuleError> {
        rules.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in rules.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(RuleError::DuplicateId(pair[0].id.clone()));
            }
        }
        for rule in &rules {
            check(rule).map_err(|reason| RuleError::Invalid { rule: rule.id.clone(), reason })?;
        }
        Ok(RuleSet { rules })
    }

    pub fn from_json(text: &str) -> Result<RuleSet, RuleError> {
        let rules = serde_json::from_str(text).map_err(|e| RuleError::Json(e.to_string()))?;
        RuleSet::new(rules)
    }

    pub fn get(&self, id: &str) -> Option<&MappingRule> {
        self.rules.iter().find(|r| r.id == id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &MappingRule> {
        self.rules.iter()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn without(&self, id: &str) -> RuleSet {
        RuleSet { rules: self.rules.iter().filter(|r| r.id != id).cloned().collect() }
    }
}
