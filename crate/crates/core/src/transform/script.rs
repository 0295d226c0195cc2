//! Replayable extension scripts.

use serde::{Deserialize, Serialize};

use super::{remap, TransformError};
use crate::expr::{Expr, ParamRef};
use crate::sskr::{forms, form, validate, Cell, MrsRow, Parameter, Sskr, Variable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Step {
    AddParameter(Parameter),
    /// Inserts a column at 1-based position `at` (default: last).
    AddVariable {
        id: String,
        label: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        at: Option<usize>,
    },
    /// Inserts an all-zero row at 1-based position `at` (default: last).
    /// References in `primary` use the row's index after insertion.
    AddRule {
        label: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        at: Option<usize>,
        #[serde(with = "form")]
        primary: Expr,
        #[serde(default, with = "forms", skip_serializing_if = "Vec::is_empty")]
        alternates: Vec<Expr>,
    },
    SetCell {
        row: String,
        col: String,
        cell: Cell,
    },
    SetMrs {
        row: String,
        #[serde(with = "form")]
        primary: Expr,
        #[serde(default, with = "forms", skip_serializing_if = "Vec::is_empty")]
        alternates: Vec<Expr>,
    },
    AppendMkmItem {
        text: String,
    },
    LinkMkmRef {
        row: String,
        col: String,
        k: usize,
        items: Vec<usize>,
    },
}

pub type ExtensionScript = Vec<Step>;

pub fn parse_script(text: &str) -> Result<ExtensionScript, String> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| format!("at {}: {}", e.path(), e.inner()))
}

fn row_of(s: &Sskr, label: &str) -> Result<usize, String> {
    s.mrm.row_index(label).ok_or_else(|| format!("no rule labelled `{label}`"))
}

fn col_of(s: &Sskr, id: &str) -> Result<usize, String> {
    s.column(id).ok_or_else(|| format!("no variable `{id}`"))
}

fn insert_position(at: Option<usize>, len: usize, what: &str) -> Result<usize, String> {
    match at {
        None => Ok(len + 1),
        Some(p) if (1..=len + 1).contains(&p) => Ok(p),
        Some(p) => Err(format!("{what} position {p} is outside 1..={}", len + 1)),
    }
}

fn shift_refs(s: &mut Sskr, row_map: impl Fn(usize) -> usize + Copy, col_map: impl Fn(usize) -> usize + Copy) {
    for row in &mut s.mrs.rows {
        row.primary = remap(&row.primary, row_map, col_map);
        for alt in &mut row.alternates {
            *alt = remap(alt, row_map, col_map);
        }
    }
    s.mkm.refs = std::mem::take(&mut s.mkm.refs)
        .into_iter()
        .map(|(p, items)| (ParamRef::new(row_map(p.row), col_map(p.col), p.k), items))
        .collect();
}

fn apply_step(s: &mut Sskr, step: &Step) -> Result<(), String> {
    match step {
        Step::AddParameter(p) => {
            if s.parameter(&p.id).is_some() {
                return Err(format!("parameter `{}` already exists", p.id));
            }
            s.parameters.push(p.clone());
        }
        Step::AddVariable { id, label, at } => {
            if s.column(id).is_some() {
                return Err(format!("variable `{id}` already exists"));
            }
            let at = insert_position(*at, s.variables.len(), "column")?;
            s.variables.insert(at - 1, Variable { id: id.clone(), label: label.clone() });
            for row in &mut s.mrm.cells {
                row.insert(at - 1, Cell::Zero);
            }
            shift_refs(s, |r| r, |c| if c >= at { c + 1 } else { c });
        }
        Step::AddRule { label, at, primary, alternates } => {
            if s.mrm.row_index(label).is_some() {
                return Err(format!("rule `{label}` already exists"));
            }
            let at = insert_position(*at, s.mrm.rows.len(), "row")?;
            shift_refs(s, |r| if r >= at { r + 1 } else { r }, |c| c);
            s.mrm.rows.insert(at - 1, label.clone());
            s.mrm.cells.insert(at - 1, vec![Cell::Zero; s.variables.len()]);
            s.mrs.rows.insert(at - 1, MrsRow { primary: primary.clone(), alternates: alternates.clone() });
        }
        Step::SetCell { row, col, cell } => {
            let (r, c) = (row_of(s, row)?, col_of(s, col)?);
            if let Some(unknown) = cell.params().iter().find(|id| s.parameter(id).is_none()) {
                return Err(format!("unknown parameter `{unknown}`"));
            }
            let slot = s
                .mrm
                .cells
                .get_mut(r - 1)
                .and_then(|cells| cells.get_mut(c - 1))
                .ok_or_else(|| format!("cell ({r},{c}) is outside the matrix"))?;
            *slot = cell.clone();
        }
        Step::SetMrs { row, primary, alternates } => {
            let r = row_of(s, row)?;
            let slot = s.mrs.rows.get_mut(r - 1).ok_or_else(|| format!("row {r} has no MRS entry"))?;
            *slot = MrsRow { primary: primary.clone(), alternates: alternates.clone() };
        }
        Step::AppendMkmItem { text } => s.mkm.items.push(text.clone()),
        Step::LinkMkmRef { row, col, k, items } => {
            let (r, c) = (row_of(s, row)?, col_of(s, col)?);
            if *k == 0 {
                return Err("tuple index must be at least 1".into());
            }
            s.mkm.refs.insert(ParamRef::new(r, c, *k), items.clone());
        }
    }
    Ok(())
}

/// Applies `script` to a copy of `s`. Either every step succeeds and the
/// result validates, or an error is returned and nothing is changed.
pub fn apply(s: &Sskr, script: &[Step]) -> Result<Sskr, TransformError> {
    let mut out = s.clone();
    for (index, step) in script.iter().enumerate() {
        apply_step(&mut out, step).map_err(|reason| TransformError::Step { index, reason })?;
    }
    let report = validate(&out);
    if report.has_errors() {
        return Err(TransformError::ValidationFailed(report));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use crate::sskr::{Mrm, Mrs};

    fn decay() -> Sskr {
        Sskr {
            variables: vec![Variable { id: "X".into(), label: "x".into() }],
            parameters: vec![Parameter::new("k", "k").with_value(1.0)],
            mrm: Mrm { rows: vec!["dX/dt".into()], cells: vec![vec![Cell::present(&["k"])]] },
            mrs: Mrs { rows: vec![MrsRow::new(parse_expr("-p(1,1,1)*v(1)").unwrap())] },
            ..Sskr::default()
        }
    }

    #[test]
    fn empty_script_is_identity() {
        assert_eq!(apply(&decay(), &[]).unwrap(), decay());
    }

    #[test]
    fn inserting_columns_and_rows_reindexes_references() {
        let script = parse_script(
            r#"[
            {"op": "add_variable", "id": "W", "label": "w", "at": 1},
            {"op": "add_rule", "label": "dW/dt", "at": 1, "primary": "p(1,2,1)*v(2)"},
            {"op": "set_cell", "row": "dW/dt", "col": "X", "cell": ["k"]},
            {"op": "append_mkm_item", "text": "k is a rate"},
            {"op": "link_mkm_ref", "row": "dX/dt", "col": "X", "k": 1, "items": [1]}
        ]"#,
        )
        .unwrap();
        let out = apply(&decay(), &script).unwrap();
        assert_eq!(out.mrs.rows[1].primary.to_string(), "-p(2,2,1)*v(2)");
        assert_eq!(out.mrs.rows[0].primary.to_string(), "p(1,2,1)*v(2)");
        assert_eq!(out.mkm.refs.keys().copied().collect::<Vec<_>>(), vec![ParamRef::new(2, 2, 1)]);
    }

    #[test]
    fn failures_are_atomic() {
        let s = decay();
        let script = vec![
            Step::AddParameter(Parameter::new("q", "q")),
            Step::AddVariable { id: "X".into(), label: "again".into(), at: None },
        ];
        match apply(&s, &script) {
            Err(TransformError::Step { index: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        let script = vec![Step::AddRule {
            label: "dY/dt".into(),
            at: None,
            primary: parse_expr("p(2,1,1)").unwrap(),
            alternates: vec![],
        }];
        match apply(&s, &script) {
            Err(TransformError::ValidationFailed(report)) => {
                assert!(report.errors().any(|e| e.message.contains("(2,1)")), "{report}")
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(s, decay());
    }
}
