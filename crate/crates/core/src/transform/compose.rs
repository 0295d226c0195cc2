use std::collections::HashMap;

use super::{remap, TransformError};
use crate::expr::ParamRef;
use crate::sskr::{validate, Cell, Computed, Mfm, MfmNode, MrsRow, Sskr, SpaceKind};

fn require_valid(s: &Sskr, which: &'static str) -> Result<(), TransformError> {
    let report = validate(s);
    if report.has_errors() {
        return Err(TransformError::InvalidInput { which, report });
    }
    Ok(())
}

/// The model's flow, or one rule node per row when it has none.
fn flow_of(s: &Sskr) -> Mfm {
    s.mfm.clone().unwrap_or_else(|| {
        let n = s.mrm.rows.len();
        Mfm {
            unit: "time step".into(),
            nodes: s.mrm.rows.iter().cloned().map(MfmNode::Rule).collect(),
            edges: vec![vec![0; n]; n],
        }
    })
}

/// Appends `b`'s rows below `a`'s, mapping `b`'s columns through `col_map`
/// (1-based into the merged registry). Cells of `a`'s rows under columns
/// new to `a` are filled with `fill`.
fn append_rows(out: &mut Sskr, b: &Sskr, col_map: &[usize], fill: Cell) {
    let width = out.variables.len();
    for row in &mut out.mrm.cells {
        row.resize(width, fill.clone());
    }
    let offset = out.mrm.rows.len();
    for (label, cells) in b.mrm.rows.iter().zip(&b.mrm.cells) {
        let mut merged = vec![Cell::Zero; width];
        for (c, cell) in cells.iter().enumerate() {
            merged[col_map[c] - 1] = cell.clone();
        }
        out.mrm.rows.push(label.clone());
        out.mrm.cells.push(merged);
    }
    let rows = |r: usize| r + offset;
    let cols = |c: usize| col_map.get(c.wrapping_sub(1)).copied().unwrap_or(c);
    for row in &b.mrs.rows {
        out.mrs.rows.push(MrsRow {
            primary: remap(&row.primary, rows, cols),
            alternates: row.alternates.iter().map(|e| remap(e, rows, cols)).collect(),
        });
    }
    let item_offset = out.mkm.items.len();
    out.mkm.items.extend(b.mkm.items.iter().cloned());
    for (p, items) in &b.mkm.refs {
        out.mkm
            .refs
            .insert(ParamRef::new(rows(p.row), cols(p.col), p.k), items.iter().map(|i| i + item_offset).collect());
    }
}

/// Casts parameter `param` of `s` as the output of the sub-model `sub`,
/// computed by the sub-model row `output_row`.
///
/// The sub-model's variables become new columns (forbidden in every
/// original row), its rows are appended, and the flow gains a nested node
/// for the sub-model ordered before the rows consuming the parameter.
pub fn decompose_parameter(s: &Sskr, param: &str, sub: &Sskr, output_row: &str) -> Result<Sskr, TransformError> {
    if s.parameter(param).is_none() {
        return Err(TransformError::UnknownParameter(param.to_string()));
    }
    require_valid(sub, "sub-model")?;
    if sub.mrm.row_index(output_row).is_none() {
        return Err(TransformError::UnknownRow(output_row.to_string()));
    }
    for v in &sub.variables {
        if s.column(&v.id).is_some() || s.parameter(&v.id).is_some() {
            return Err(TransformError::NameCollision { kind: "variable", name: v.id.clone() });
        }
    }
    for label in &sub.mrm.rows {
        if s.mrm.row_index(label).is_some() {
            return Err(TransformError::NameCollision { kind: "row", name: label.clone() });
        }
    }
    for p in &sub.parameters {
        if s.parameter(&p.id).is_some() || s.column(&p.id).is_some() {
            return Err(TransformError::NameCollision { kind: "parameter", name: p.id.clone() });
        }
    }

    let mut out = s.clone();
    let n0 = out.variables.len();
    out.variables.extend(sub.variables.iter().cloned());
    out.parameters.extend(sub.parameters.iter().cloned());
    let col_map: Vec<usize> = (1..=sub.variables.len()).map(|c| c + n0).collect();
    append_rows(&mut out, sub, &col_map, Cell::Forbidden);
    out.parameter_mut(param).expect("checked above").computed = Some(Computed { row: output_row.to_string() });

    let base = flow_of(s);
    let consumers: Vec<bool> = base
        .nodes
        .iter()
        .map(|node| match node {
            MfmNode::Rule(label) => s
                .mrm
                .row_index(label)
                .is_some_and(|r| s.mrm.cells[r - 1].iter().any(|c| c.params().iter().any(|id| id == param))),
            MfmNode::Sub(_) => false,
        })
        .collect();
    let m = base.nodes.len();
    let mut edges = vec![vec![0u8; m + 1]; m + 1];
    for (j, consumes) in consumers.iter().enumerate() {
        edges[0][j + 1] = u8::from(*consumes);
    }
    for (i, row) in base.edges.iter().enumerate() {
        for (j, &e) in row.iter().enumerate() {
            edges[i + 1][j + 1] = e;
        }
    }
    let mut nodes = vec![MfmNode::Sub(Box::new(flow_of(sub)))];
    nodes.extend(base.nodes);
    out.mfm = Some(Mfm { unit: base.unit, nodes, edges });
    if out.ddt.space == SpaceKind::None && sub.ddt.space != SpaceKind::None {
        out.ddt = sub.ddt.clone();
    }

    let report = validate(&out);
    if report.has_errors() {
        return Err(TransformError::ValidationFailed(report));
    }
    Ok(out)
}

/// Unites two models. Each `(a_id, b_id)` pair merges `b`'s variable into
/// `a`'s column; all rows are kept separately.
pub fn compose(a: &Sskr, b: &Sskr, shared: &[(String, String)]) -> Result<Sskr, TransformError> {
    require_valid(a, "a")?;
    require_valid(b, "b")?;
    if a.ddt.time != b.ddt.time && !b.variables.is_empty() {
        return Err(TransformError::IncompatibleDdt(a.ddt.time, b.ddt.time));
    }
    let mut merged_into: HashMap<&str, usize> = HashMap::new();
    for (ai, bi) in shared {
        let col = a.column(ai).ok_or_else(|| TransformError::UnknownVariable(ai.clone()))?;
        b.column(bi).ok_or_else(|| TransformError::UnknownVariable(bi.clone()))?;
        merged_into.insert(bi.as_str(), col);
    }
    for p in &b.parameters {
        if a.parameter(&p.id).is_some() {
            return Err(TransformError::ParameterIdCollision(p.id.clone()));
        }
    }
    for label in &b.mrm.rows {
        if a.mrm.row_index(label).is_some() {
            return Err(TransformError::RowLabelCollision(label.clone()));
        }
    }

    let mut out = a.clone();
    let mut col_map = Vec::with_capacity(b.variables.len());
    for v in &b.variables {
        match merged_into.get(v.id.as_str()) {
            Some(&col) => col_map.push(col),
            None => {
                if out.column(&v.id).is_some() {
                    return Err(TransformError::VariableIdCollision(v.id.clone()));
                }
                out.variables.push(v.clone());
                col_map.push(out.variables.len());
            }
        }
    }
    out.parameters.extend(b.parameters.iter().cloned());
    append_rows(&mut out, b, &col_map, Cell::Zero);
    if a.mfm.is_some() || b.mfm.is_some() {
        let (fa, fb) = (flow_of(a), flow_of(b));
        let (na, nb) = (fa.nodes.len(), fb.nodes.len());
        let mut edges = vec![vec![0u8; na + nb]; na + nb];
        for (i, row) in fa.edges.iter().enumerate() {
            edges[i][..na].copy_from_slice(row);
        }
        for (i, row) in fb.edges.iter().enumerate() {
            edges[na + i][na..].copy_from_slice(row);
        }
        let mut nodes = fa.nodes;
        nodes.extend(fb.nodes);
        out.mfm = Some(Mfm { unit: fa.unit, nodes, edges });
    }

    let report = validate(&out);
    if report.has_errors() {
        return Err(TransformError::ValidationFailed(report));
    }
    Ok(out)
}
