use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::Serialize;

use super::{Boundary, Cell, Ddt, Mfm, MfmNode, SpaceKind, Sskr, Structure};
use crate::expr::Leaf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub severity: Severity,
    pub location: String,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}: {}", self.location, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Warning)
    }

    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }

    fn error(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.findings.push(Finding { severity: Severity::Error, location: location.into(), message: message.into() });
    }

    fn warn(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.findings.push(Finding { severity: Severity::Warning, location: location.into(), message: message.into() });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for finding in &self.findings {
            writeln!(f, "{finding}")?;
        }
        write!(f, "{} error(s), {} warning(s)", self.errors().count(), self.warnings().count())
    }
}

/// Symbols an MRS form may use besides cell and column references.
const TIME: &str = "t";

/// Checks every cross-component constraint. Never fails; problems are
/// reported as findings.
pub fn validate(s: &Sskr) -> ValidationReport {
    let mut report = ValidationReport::default();
    if s.variables.is_empty() && s.mrm.rows.is_empty() {
        report.warn("model", "empty model");
    }
    check_registries(s, &mut report);
    let shape_ok = check_mrm(s, &mut report);
    if shape_ok {
        check_mrs(s, &mut report);
        check_mkm(s, &mut report);
    }
    if let Some(mfm) = &s.mfm {
        let rows: HashSet<&str> = s.mrm.rows.iter().map(String::as_str).collect();
        check_mfm(mfm, "mfm", &rows, &mut report);
    }
    check_ddt(&s.ddt, &mut report);
    report
}

fn check_registries(s: &Sskr, report: &mut ValidationReport) {
    let mut seen = HashSet::new();
    for (i, v) in s.variables.iter().enumerate() {
        if !seen.insert(v.id.as_str()) {
            report.error(format!("variables/{i}"), format!("duplicate variable id `{}`", v.id));
        }
    }
    let mut params = HashSet::new();
    for (i, p) in s.parameters.iter().enumerate() {
        let at = format!("parameters/{}", p.id);
        if !params.insert(p.id.as_str()) {
            report.error(format!("parameters/{i}"), format!("duplicate parameter id `{}`", p.id));
        }
        if seen.contains(p.id.as_str()) {
            report.warn(&at, format!("`{}` is both a variable and a parameter id", p.id));
        }
        if let Some([lo, hi]) = p.bounds {
            if !(lo <= hi) {
                report.error(&at, format!("bounds [{lo}, {hi}] are inverted"));
            }
            if let Some(v) = p.value {
                if v < lo || v > hi {
                    report.error(&at, format!("value {v} lies outside bounds [{lo}, {hi}]"));
                }
            }
        }
        if let Some(c) = &p.computed {
            if s.mrm.row_index(&c.row).is_none() {
                report.error(&at, format!("computed by unknown row `{}`", c.row));
            }
        }
    }
    let used: HashSet<&str> = s.mrm.cells.iter().flatten().flat_map(|c| c.params()).map(String::as_str).collect();
    for p in &s.parameters {
        if !used.contains(p.id.as_str()) {
            report.warn(format!("parameters/{}", p.id), "parameter is never referenced by any cell");
        }
    }
}

/// Returns whether the matrix is rectangular and sized to the registries.
fn check_mrm(s: &Sskr, report: &mut ValidationReport) -> bool {
    let mrm = &s.mrm;
    let mut ok = true;
    if mrm.rows.len() != mrm.cells.len() {
        report.error("mrm", format!("{} row labels but {} cell rows", mrm.rows.len(), mrm.cells.len()));
        ok = false;
    }
    let mut labels = HashSet::new();
    for label in &mrm.rows {
        if !labels.insert(label.as_str()) {
            report.error("mrm/rows", format!("duplicate row label `{label}`"));
        }
    }
    let n = s.variables.len();
    let params: HashSet<&str> = s.parameters.iter().map(|p| p.id.as_str()).collect();
    for (r, row) in mrm.cells.iter().enumerate() {
        if row.len() != n {
            report.error(
                format!("mrm/cells/{}", r + 1),
                format!("row has {} cells but there are {n} variables (matrix is not rectangular)", row.len()),
            );
            ok = false;
        }
        for (c, cell) in row.iter().enumerate() {
            for id in cell.params() {
                if !params.contains(id.as_str()) {
                    report.error(format!("mrm({},{})", r + 1, c + 1), format!("unknown parameter id `{id}`"));
                }
            }
        }
    }
    ok
}

fn check_mrs(s: &Sskr, report: &mut ValidationReport) {
    let mrm = &s.mrm;
    if s.mrs.rows.len() != mrm.rows.len() {
        report.error("mrs", format!("{} MRS rows for {} MRM rows", s.mrs.rows.len(), mrm.rows.len()));
    }
    let n = s.variables.len();
    for (i, row) in s.mrs.rows.iter().enumerate() {
        let r = i + 1;
        let mut by_param: BTreeSet<usize> = BTreeSet::new();
        let mut by_var: BTreeSet<usize> = BTreeSet::new();
        for (f, form) in row.forms().enumerate() {
            let at = if f == 0 { format!("mrs/{r}/primary") } else { format!("mrs/{r}/alternates/{}", f - 1) };
            for leaf in form.free_symbols() {
                match leaf {
                    Leaf::Param(p) => {
                        by_param.insert(p.col);
                        if p.row != r {
                            report.error(&at, format!("{p} names row {} from row {r}", p.row));
                            continue;
                        }
                        match mrm.cell(p.row, p.col) {
                            None => report.error(&at, format!("{p} points outside the matrix")),
                            Some(Cell::Present(ids)) if p.k > ids.len() => report.error(
                                &at,
                                format!("{p} asks for element {} of cell ({},{}) which holds {}", p.k, p.row, p.col, ids.len()),
                            ),
                            Some(Cell::Present(_)) => {}
                            Some(Cell::Zero) => {
                                report.error(&at, format!("{p} references cell ({},{}) which is zero", p.row, p.col))
                            }
                            Some(Cell::Forbidden) => report
                                .error(&at, format!("{p} references cell ({},{}) which is forbidden", p.row, p.col)),
                        }
                    }
                    Leaf::Var(c) => {
                        by_var.insert(c);
                        if c == 0 || c > n {
                            report.error(&at, format!("v({c}) is not a column"));
                        } else if !mrm.cell(r, c).is_some_and(Cell::is_present) {
                            report.error(&at, format!("v({c}) appears but cell ({r},{c}) is not present"));
                        }
                    }
                    Leaf::Sym(name) if name == TIME => {}
                    Leaf::Sym(name) => report.error(&at, format!("free symbol `{name}` is not a cell or column reference")),
                }
            }
        }
        if let Some(cells) = mrm.cells.get(i) {
            for (c, cell) in cells.iter().enumerate() {
                // a parameterized cell counts as used through its parameters,
                // a bare one through its column variable
                let used = match cell {
                    Cell::Present(ids) if ids.is_empty() => by_var.contains(&(c + 1)),
                    Cell::Present(_) => by_param.contains(&(c + 1)),
                    _ => true,
                };
                if !used {
                    report.warn(format!("mrm({r},{})", c + 1), "present cell is not referenced by its row's MRS");
                }
            }
        }
    }
}

fn check_mkm(s: &Sskr, report: &mut ValidationReport) {
    let items = s.mkm.items.len();
    for (at, indices) in &s.mkm.refs {
        let loc = format!("mkm/refs/{},{},{}", at.row, at.col, at.k);
        for &i in indices {
            if i == 0 || i > items {
                report.error(&loc, format!("item index {i} is outside 1..={items}"));
            }
        }
        match s.mrm.cell(at.row, at.col) {
            Some(Cell::Present(ids)) if at.k <= ids.len() => {}
            Some(Cell::Present(_)) => report.error(&loc, format!("cell ({},{}) has no element {}", at.row, at.col, at.k)),
            _ => report.error(&loc, format!("cell ({},{}) is not present", at.row, at.col)),
        }
    }
}

fn check_mfm(mfm: &Mfm, at: &str, rows: &HashSet<&str>, report: &mut ValidationReport) {
    let n = mfm.nodes.len();
    if mfm.edges.len() != n || mfm.edges.iter().any(|r| r.len() != n) {
        report.error(at, format!("edge matrix must be {n}x{n}"));
    }
    if mfm.edges.iter().flatten().any(|&e| e > 1) {
        report.error(at, "edge entries must be 0 or 1");
    }
    for (i, node) in mfm.nodes.iter().enumerate() {
        match node {
            MfmNode::Rule(label) if !rows.contains(label.as_str()) => {
                report.error(format!("{at}/nodes/{i}"), format!("unknown rule `{label}`"))
            }
            MfmNode::Rule(_) => {}
            MfmNode::Sub(sub) => check_mfm(sub, &format!("{at}/nodes/{i}/sub"), rows, report),
        }
    }
}

fn check_ddt(ddt: &Ddt, report: &mut ValidationReport) {
    if ddt.dimensions > 3 {
        report.error("ddt", format!("dimensionality {} is not in 0..=3", ddt.dimensions));
    }
    if ddt.dimensions == 0 {
        if ddt.space != SpaceKind::None {
            report.error("ddt", "zero-dimensional models have no space kind");
        }
        if ddt.boundary != Boundary::None {
            report.error("ddt", "zero-dimensional models have no boundary");
        }
        if ddt.structure != Structure::None {
            report.error("ddt", "zero-dimensional models have no spatial structure");
        }
    } else if ddt.space == SpaceKind::None {
        report.error("ddt", format!("{}-dimensional space needs a space kind", ddt.dimensions));
    }
    if let Structure::Network(adjacency) = &ddt.structure {
        let n = adjacency.len();
        let mut seen = HashSet::new();
        for (i, neighbours) in adjacency.iter().enumerate() {
            for &j in neighbours {
                if j >= n {
                    report.error("ddt/structure", format!("node {i} links to {j}, outside 0..{n}"));
                } else if !seen.insert((i, j)) {
                    report.error("ddt/structure", format!("duplicate edge {i} -> {j}"));
                }
            }
        }
    }
}
