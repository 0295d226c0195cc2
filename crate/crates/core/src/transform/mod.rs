//! Extension, decomposition, composition and comparison of models.

mod compare;
mod compose;
mod script;

use thiserror::Error;

use crate::expr::{Expr, ParamRef};
use crate::sskr::ValidationReport;

pub use compare::{compare, CellDiff, ModelDiff, RowComparison, RowVerdict};
pub use compose::{compose, decompose_parameter};
pub use script::{apply, parse_script, ExtensionScript, Step};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("step {index}: {reason}")]
    Step { index: usize, reason: String },
    #[error("result does not validate:\n{0}")]
    ValidationFailed(ValidationReport),
    #[error("input `{which}` does not validate:\n{report}")]
    InvalidInput { which: &'static str, report: ValidationReport },
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("unknown row `{0}`")]
    UnknownRow(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("{kind} `{name}` exists in both models")]
    NameCollision { kind: &'static str, name: String },
    #[error("parameter id `{0}` exists in both models")]
    ParameterIdCollision(String),
    #[error("variable id `{0}` exists in both models and is not shared")]
    VariableIdCollision(String),
    #[error("row label `{0}` exists in both models")]
    RowLabelCollision(String),
    #[error("time kinds differ ({0:?} vs {1:?})")]
    IncompatibleDdt(crate::sskr::TimeKind, crate::sskr::TimeKind),
}

/// Rewrites every cell and column reference through the given index maps.
pub(crate) fn remap(e: &Expr, row_map: impl Fn(usize) -> usize, col_map: impl Fn(usize) -> usize) -> Expr {
    e.map(&mut |node| match node {
        Expr::Param(p) => Expr::Param(ParamRef::new(row_map(p.row), col_map(p.col), p.k)),
        Expr::Var(c) => Expr::Var(col_map(c)),
        other => other,
    })
}
