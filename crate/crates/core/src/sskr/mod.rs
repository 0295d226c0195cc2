//! The structured knowledge representation of a model: rule matrix (MRM),
//! rule structure (MRS), discretization/dimensionality/topology (DDT),
//! flow matrix (MFM) and knowledge matrix (MKM), plus the variable and
//! parameter registries they index into.
//!
//! Rows and columns are 1-based everywhere, matching `p(r,c,k)`.

pub(crate) mod io;
mod validate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::expr::{Expr, ParamRef};

pub use io::{load, save, LoadError, SaveError};
pub(crate) use io::{form, forms};
pub use validate::{validate, Finding, Severity, ValidationReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variable {
    pub id: String,
    pub label: String,
}

/// Marks a parameter whose value is produced by a sub-model row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Computed {
    pub row: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameter {
    pub id: String,
    pub symbol: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default)]
    pub fixed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub computed: Option<Computed>,
}

impl Parameter {
    pub fn new(id: impl Into<String>, symbol: impl Into<String>) -> Self {
        Parameter { id: id.into(), symbol: symbol.into(), value: None, fixed: false, bounds: None, computed: None }
    }

    pub fn with_value(mut self, value: f64) -> Self {
        self.value = Some(value);
        self
    }

    pub fn with_bounds(mut self, lo: f64, hi: f64) -> Self {
        self.bounds = Some([lo, hi]);
        self
    }
}

/// One MRM element. An empty `Present` list is an unparameterized
/// interaction (the "1" entries of a rule matrix).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cell {
    Zero,
    Forbidden,
    Present(Vec<String>),
}

impl Cell {
    pub fn present(ids: &[&str]) -> Cell {
        Cell::Present(ids.iter().map(|s| s.to_string()).collect())
    }

    pub fn is_present(&self) -> bool {
        matches!(self, Cell::Present(_))
    }

    pub fn params(&self) -> &[String] {
        match self {
            Cell::Present(ids) => ids,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mrm {
    pub rows: Vec<String>,
    pub cells: Vec<Vec<Cell>>,
}

impl Mrm {
    /// Cell at 1-based `(row, col)`, if in range.
    pub fn cell(&self, row: usize, col: usize) -> Option<&Cell> {
        self.cells.get(row.checked_sub(1)?)?.get(col.checked_sub(1)?)
    }

    pub fn row_index(&self, label: &str) -> Option<usize> {
        self.rows.iter().position(|r| r == label).map(|i| i + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MrsRow {
    #[serde(with = "io::form")]
    pub primary: Expr,
    #[serde(default, with = "io::forms", skip_serializing_if = "Vec::is_empty")]
    pub alternates: Vec<Expr>,
}

impl MrsRow {
    pub fn new(primary: Expr) -> Self {
        MrsRow { primary, alternates: Vec::new() }
    }

    pub fn forms(&self) -> impl Iterator<Item = &Expr> {
        std::iter::once(&self.primary).chain(&self.alternates)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mrs {
    pub rows: Vec<MrsRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    #[default]
    None,
    Discrete,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TimeKind {
    Discrete,
    #[default]
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Discretization {
    #[default]
    Fixed,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    None,
    Dirichlet,
    Neumann,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    #[default]
    None,
    Contiguous,
    /// Adjacency list over 0-based node indices.
    Network(Vec<Vec<usize>>),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ddt {
    #[serde(default)]
    pub dimensions: u8,
    #[serde(default)]
    pub space: SpaceKind,
    #[serde(default)]
    pub time: TimeKind,
    #[serde(default)]
    pub space_discretization: Discretization,
    #[serde(default)]
    pub time_discretization: Discretization,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub structure: Structure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MfmNode {
    /// An MRM row, by label.
    Rule(String),
    Sub(Box<Mfm>),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mfm {
    pub unit: String,
    pub nodes: Vec<MfmNode>,
    /// `edges[i][j] == 1` orders node `i` before node `j`.
    pub edges: Vec<Vec<u8>>,
}

impl Mfm {
    /// Every rule label reachable through nested sub-flows.
    pub fn rule_labels(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for node in &self.nodes {
            match node {
                MfmNode::Rule(label) => out.push(label.as_str()),
                MfmNode::Sub(sub) => out.extend(sub.rule_labels()),
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mkm {
    #[serde(default)]
    pub items: Vec<String>,
    /// Cell-tuple element to 1-based item indices.
    #[serde(default, with = "io::refs")]
    pub refs: BTreeMap<ParamRef, Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sskr {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    #[serde(default)]
    pub variables: Vec<Variable>,
    #[serde(default)]
    pub parameters: Vec<Parameter>,
    #[serde(default)]
    pub mrm: Mrm,
    #[serde(default)]
    pub mrs: Mrs,
    #[serde(default)]
    pub ddt: Ddt,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mfm: Option<Mfm>,
    #[serde(default)]
    pub mkm: Mkm,
}

/// A reference in an MRS form that does not resolve against the registries.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ResolveError {
    #[error("row {row} references {at}, which is not a parameter of a present cell")]
    BadParam { row: usize, at: ParamRef },
    #[error("row {row} references column {col}, which does not exist")]
    BadVar { row: usize, col: usize },
}

impl Sskr {
    pub fn variable(&self, id: &str) -> Option<&Variable> {
        self.variables.iter().find(|v| v.id == id)
    }

    /// 1-based column of a variable id.
    pub fn column(&self, id: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.id == id).map(|i| i + 1)
    }

    pub fn parameter(&self, id: &str) -> Option<&Parameter> {
        self.parameters.iter().find(|p| p.id == id)
    }

    pub fn parameter_mut(&mut self, id: &str) -> Option<&mut Parameter> {
        self.parameters.iter_mut().find(|p| p.id == id)
    }

    /// Parameter id that `at` points at, if the cell holds one there.
    pub fn param_id(&self, at: ParamRef) -> Option<&str> {
        let ids = self.mrm.cell(at.row, at.col)?.params();
        ids.get(at.k.checked_sub(1)?).map(String::as_str)
    }

    /// Replaces `p(r,c,k)` and `v(c)` leaves in a form of row `row` by
    /// symbols named after the parameter and variable ids they denote.
    pub fn resolve(&self, row: usize, form: &Expr) -> Result<Expr, ResolveError> {
        let mut failure = None;
        let resolved = form.map(&mut |node| match node {
            Expr::Param(at) => match self.param_id(at).filter(|_| at.row == row) {
                Some(id) => Expr::sym(id),
                None => {
                    failure.get_or_insert(ResolveError::BadParam { row, at });
                    node
                }
            },
            Expr::Var(col) => match self.variables.get(col.wrapping_sub(1)) {
                Some(v) => Expr::sym(&v.id),
                None => {
                    failure.get_or_insert(ResolveError::BadVar { row, col });
                    node
                }
            },
            other => other,
        });
        match failure {
            Some(e) => Err(e),
            None => Ok(resolved),
        }
    }

    /// One propositional statement per MRM row.
    pub fn to_propositions(&self) -> Vec<String> {
        self.mrm
            .rows
            .iter()
            .zip(&self.mrm.cells)
            .map(|(label, cells)| {
                let mut present = Vec::new();
                let mut forbidden = Vec::new();
                for (var, cell) in self.variables.iter().zip(cells) {
                    match cell {
                        Cell::Zero => {}
                        Cell::Forbidden => forbidden.push(var.id.clone()),
                        Cell::Present(ids) if ids.is_empty() => present.push(var.id.clone()),
                        Cell::Present(ids) => present.push(format!("{} via {}", var.id, ids.join(","))),
                    }
                }
                let mut text = format!("{label} is determined by {{{}}}", present.join("; "));
                if !forbidden.is_empty() {
                    text.push_str(&format!("; forbidden: {{{}}}", forbidden.join(", ")));
                }
                text
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn tiny() -> Sskr {
        Sskr {
            variables: vec![
                Variable { id: "X".into(), label: "x".into() },
                Variable { id: "Y".into(), label: "y".into() },
                Variable { id: "Z".into(), label: "z".into() },
            ],
            parameters: vec![Parameter::new("k", "k").with_value(1.0)],
            mrm: Mrm {
                rows: vec!["dX/dt".into(), "dY/dt".into()],
                cells: vec![
                    vec![Cell::present(&["k"]), Cell::Zero, Cell::Forbidden],
                    vec![Cell::present(&["k"]), Cell::present(&[]), Cell::Zero],
                ],
            },
            mrs: Mrs {
                rows: vec![
                    MrsRow::new(parse_expr("-p(1,1,1)*v(1)").unwrap()),
                    MrsRow::new(parse_expr("p(2,1,1)*v(1)*v(2)").unwrap()),
                ],
            },
            ..Sskr::default()
        }
    }

    #[test]
    fn propositions_list_present_and_forbidden() {
        let props = tiny().to_propositions();
        assert_eq!(props[0], "dX/dt is determined by {X via k}; forbidden: {Z}");
        assert_eq!(props[1], "dY/dt is determined by {X via k; Y}");
    }

    #[test]
    fn resolve_names_leaves() {
        let s = tiny();
        let e = s.resolve(2, &s.mrs.rows[1].primary).unwrap();
        assert_eq!(e.to_string(), "k*X*Y");
        let err = s.resolve(1, &parse_expr("p(1,2,1)").unwrap()).unwrap_err();
        assert_eq!(err, ResolveError::BadParam { row: 1, at: ParamRef::new(1, 2, 1) });
        let err = s.resolve(1, &parse_expr("v(9)").unwrap()).unwrap_err();
        assert_eq!(err, ResolveError::BadVar { row: 1, col: 9 });
    }

    #[test]
    fn cell_lookup_is_one_based() {
        let s = tiny();
        assert_eq!(s.mrm.cell(1, 3), Some(&Cell::Forbidden));
        assert_eq!(s.mrm.cell(0, 1), None);
        assert_eq!(s.param_id(ParamRef::new(2, 1, 1)), Some("k"));
        assert_eq!(s.param_id(ParamRef::new(2, 1, 2)), None);
    }
}
