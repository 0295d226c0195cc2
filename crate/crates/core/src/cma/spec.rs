//! Framework-tagged model specifications.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::expr::{BinOp, Expr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Framework {
    Ode,
    /// ODE system whose flagged variables carry Laplacian terms.
    Pde,
    PetriNet,
    Abm,
}

impl Framework {
    pub const ALL: [Framework; 4] = [Framework::Ode, Framework::Pde, Framework::PetriNet, Framework::Abm];
}

impl fmt::Display for Framework {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Framework::Ode => "ODE",
            Framework::Pde => "PDE",
            Framework::PetriNet => "PetriNet",
            Framework::Abm => "ABM",
        })
    }
}

impl FromStr for Framework {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "ode" => Ok(Framework::Ode),
            "pde" => Ok(Framework::Pde),
            "petrinet" => Ok(Framework::PetriNet),
            "abm" => Ok(Framework::Abm),
            _ => Err(format!("unknown framework `{s}` (expected ode, pde, petri-net or abm)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub expr: Expr,
    /// Where the term came from: a plan step or an MRM row.
    pub origin: String,
}

impl Term {
    /// Rate-law name for the term.
    pub fn rate_form(&self) -> &'static str {
        let e = &self.expr;
        if e.contains_laplacian() {
            "Diffusion"
        } else if e.calls("H") {
            "Hill"
        } else if e.calls("S") {
            "Secretion"
        } else if e.calls("B") {
            "Binding"
        } else if e.calls("D") {
            "Dissociation"
        } else if is_mass_action(e) {
            "MassAction"
        } else {
            "Custom"
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Derivative {
    pub variable: String,
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub label: String,
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecParameter {
    pub id: String,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    pub framework: Framework,
    pub variables: Vec<String>,
    pub parameters: Vec<SpecParameter>,
    /// In variable order; variables without terms have no entry.
    pub derivatives: Vec<Derivative>,
    pub pde: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transitions: Vec<Transition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<String>,
}

impl ModelSpec {
    pub fn empty(name: impl Into<String>, framework: Framework) -> ModelSpec {
        ModelSpec {
            name: name.into(),
            framework,
            variables: Vec::new(),
            parameters: Vec::new(),
            derivatives: Vec::new(),
            pde: BTreeSet::new(),
            transitions: Vec::new(),
            trace: None,
        }
    }

    pub fn terms(&self, variable: &str) -> &[Term] {
        self.derivatives.iter().find(|d| d.variable == variable).map_or(&[], |d| &d.terms)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("spec serializes");
        text.push('\n');
        text
    }
}

/// Signed product of constants, symbols and references, raised at most
/// to positive integer powers; first-order named forms count as well.
pub fn is_mass_action(e: &Expr) -> bool {
    match e {
        Expr::Const(c) => c.im == 0.0,
        Expr::Sym(_) | Expr::Var(_) | Expr::Param(_) => true,
        Expr::Neg(inner) => is_mass_action(inner),
        Expr::Binary(BinOp::Mul, a, b) => is_mass_action(a) && is_mass_action(b),
        Expr::Binary(BinOp::Pow, a, b) => {
            matches!(**a, Expr::Sym(_) | Expr::Var(_) | Expr::Param(_))
                && matches!(**b, Expr::Const(c) if c.im == 0.0 && c.re >= 1.0 && c.re.fract() == 0.0)
        }
        Expr::Call(name, args) => {
            matches!(name.as_str(), "S" | "B" | "D") && args.iter().all(|a| matches!(a, Expr::Sym(_) | Expr::Var(_)))
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    #[test]
    fn mass_action_shapes() {
        for ok in ["-k*X", "k*X*Y", "2*k*X^2", "S(muc2)", "-B(A,B)"] {
            assert!(is_mass_action(&parse_expr(ok).unwrap()), "{ok}");
        }
        for bad in ["H(X)", "k*X+Y", "X/Y", "X^0.5", "lap(X)"] {
            assert!(!is_mass_action(&parse_expr(bad).unwrap()), "{bad}");
        }
    }

    #[test]
    fn rate_forms() {
        let form = |s: &str| Term { expr: parse_expr(s).unwrap(), origin: String::new() }.rate_form();
        assert_eq!(form("H(R)"), "Hill");
        assert_eq!(form("-k4*R"), "MassAction");
        assert_eq!(form("lap(A_E)"), "Diffusion");
        assert_eq!(form("sin(t)"), "Custom");
    }

    #[test]
    fn framework_names() {
        assert_eq!("petri-net".parse::<Framework>(), Ok(Framework::PetriNet));
        assert_eq!("ODE".parse::<Framework>(), Ok(Framework::Ode));
        assert!("sde".parse::<Framework>().is_err());
    }
}
