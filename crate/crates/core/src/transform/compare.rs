use serde::Serialize;

use crate::expr::{equivalent, Domain, EquivalenceVerdict};
use crate::sskr::{Cell, Sskr};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellDiff {
    pub row: String,
    pub col: String,
    #[serde(serialize_with = "cell_text")]
    pub a: Cell,
    #[serde(serialize_with = "cell_text")]
    pub b: Cell,
}

fn cell_text<S: serde::Serializer>(c: &Cell, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(&describe(c))
}

fn describe(c: &Cell) -> String {
    match c {
        Cell::Zero => "0".into(),
        Cell::Forbidden => "null".into(),
        Cell::Present(ids) if ids.is_empty() => "1".into(),
        Cell::Present(ids) => ids.join(","),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RowVerdict {
    Compared(EquivalenceVerdict),
    NotComparable { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowComparison {
    pub label: String,
    pub structurally_changed: bool,
    pub verdict: RowVerdict,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ModelDiff {
    pub variables_only_in_a: Vec<String>,
    pub variables_only_in_b: Vec<String>,
    pub rows_only_in_a: Vec<String>,
    pub rows_only_in_b: Vec<String>,
    pub cells: Vec<CellDiff>,
    pub rows: Vec<RowComparison>,
}

impl ModelDiff {
    pub fn is_structurally_empty(&self) -> bool {
        self.variables_only_in_a.is_empty()
            && self.variables_only_in_b.is_empty()
            && self.rows_only_in_a.is_empty()
            && self.rows_only_in_b.is_empty()
            && self.cells.is_empty()
    }

    pub fn changed_rows(&self) -> Vec<&str> {
        self.rows.iter().filter(|r| r.structurally_changed).map(|r| r.label.as_str()).collect()
    }

    pub fn all_equivalent(&self) -> bool {
        self.rows.iter().all(|r| matches!(&r.verdict, RowVerdict::Compared(v) if v.is_equivalent()))
    }

    /// Plain-text rendering for inspection.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let list = |names: &[String]| if names.is_empty() { "-".to_string() } else { names.join(", ") };
        out.push_str(&format!("variables only in a: {}\n", list(&self.variables_only_in_a)));
        out.push_str(&format!("variables only in b: {}\n", list(&self.variables_only_in_b)));
        out.push_str(&format!("rows only in a: {}\n", list(&self.rows_only_in_a)));
        out.push_str(&format!("rows only in b: {}\n", list(&self.rows_only_in_b)));
        for c in &self.cells {
            out.push_str(&format!("cell {} / {}: {} -> {}\n", c.row, c.col, describe(&c.a), describe(&c.b)));
        }
        for r in &self.rows {
            let verdict = match &r.verdict {
                RowVerdict::Compared(v) => match v.witness() {
                    None => format!("equivalent ({} samples)", v.samples),
                    Some(w) => {
                        let at: Vec<String> = w.bindings.iter().map(|(l, x)| format!("{l}={x}")).collect();
                        format!("differs at sample {} [{}]: {} vs {}", w.sample, at.join(", "), w.left, w.right)
                    }
                },
                RowVerdict::NotComparable { reason } => format!("not comparable: {reason}"),
            };
            let mark = if r.structurally_changed { " (structure changed)" } else { "" };
            out.push_str(&format!("row {}{mark}: {verdict}\n", r.label));
        }
        out
    }
}

fn cell_at<'a>(s: &'a Sskr, row: usize, var: &str) -> &'a Cell {
    s.column(var).and_then(|c| s.mrm.cell(row, c)).unwrap_or(&Cell::Zero)
}

/// Pairs rows by label; absent columns read as zero cells.
pub fn compare(a: &Sskr, b: &Sskr, n: usize, tol: f64, seed: u64) -> ModelDiff {
    let ids = |s: &Sskr| s.variables.iter().map(|v| v.id.clone()).collect::<Vec<_>>();
    let (a_vars, b_vars) = (ids(a), ids(b));
    let mut diff = ModelDiff {
        variables_only_in_a: a_vars.iter().filter(|v| !b_vars.contains(v)).cloned().collect(),
        variables_only_in_b: b_vars.iter().filter(|v| !a_vars.contains(v)).cloned().collect(),
        rows_only_in_a: a.mrm.rows.iter().filter(|r| b.mrm.row_index(r).is_none()).cloned().collect(),
        rows_only_in_b: b.mrm.rows.iter().filter(|r| a.mrm.row_index(r).is_none()).cloned().collect(),
        ..ModelDiff::default()
    };
    let columns: Vec<&String> = a_vars.iter().chain(&diff.variables_only_in_b).collect();

    for (ra, label) in a.mrm.rows.iter().enumerate().map(|(i, l)| (i + 1, l)) {
        let Some(rb) = b.mrm.row_index(label) else { continue };
        let before = diff.cells.len();
        for var in &columns {
            let (ca, cb) = (cell_at(a, ra, var), cell_at(b, rb, var));
            if ca != cb {
                diff.cells.push(CellDiff { row: label.clone(), col: (*var).clone(), a: ca.clone(), b: cb.clone() });
            }
        }
        let structurally_changed = diff.cells.len() > before;
        let verdict = compare_forms(a, ra, b, rb, n, tol, seed);
        diff.rows.push(RowComparison { label: label.clone(), structurally_changed, verdict });
    }
    diff
}

fn compare_forms(a: &Sskr, ra: usize, b: &Sskr, rb: usize, n: usize, tol: f64, seed: u64) -> RowVerdict {
    let not = |reason: String| RowVerdict::NotComparable { reason };
    let (Some(fa), Some(fb)) = (a.mrs.rows.get(ra - 1), b.mrs.rows.get(rb - 1)) else {
        return not("missing MRS entry".into());
    };
    if fa.primary.contains_laplacian() || fb.primary.contains_laplacian() {
        return not("laplacian terms cannot be sampled".into());
    }
    let ea = match a.resolve(ra, &fa.primary) {
        Ok(e) => e,
        Err(e) => return not(e.to_string()),
    };
    let eb = match b.resolve(rb, &fb.primary) {
        Ok(e) => e,
        Err(e) => return not(e.to_string()),
    };
    match equivalent(&ea, &eb, &Domain::default(), n, tol, seed) {
        Ok(v) => RowVerdict::Compared(v),
        Err(e) => not(e.to_string()),
    }
}
