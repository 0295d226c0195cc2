//! JSON on-disk format.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{validate, Cell, Sskr, ValidationReport};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("schema violation at {pointer}: {message}")]
    Schema { pointer: String, message: String },
}

#[derive(Debug, Error)]
pub enum SaveError {
    #[error("refusing to save a model with {} validation error(s)", .0.errors().count())]
    Invalid(ValidationReport),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for segment in path.iter() {
        let token = match segment {
            Segment::Seq { index } => index.to_string(),
            Segment::Map { key } => key.replace('~', "~0").replace('/', "~1"),
            Segment::Enum { variant } => variant.clone(),
            Segment::Unknown => continue,
        };
        out.push('/');
        out.push_str(&token);
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

impl Sskr {
    pub fn from_json(text: &str) -> Result<Sskr, LoadError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| LoadError::Schema {
            pointer: pointer(e.path()),
            message: e.inner().to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("model serializes");
        text.push('\n');
        text
    }
}

pub fn load(path: impl AsRef<Path>) -> Result<Sskr, LoadError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.to_path_buf(), source })?;
    Sskr::from_json(&text)
}

/// Writes `s` as pretty JSON. Models with validation errors are rejected.
pub fn save(s: &Sskr, path: impl AsRef<Path>) -> Result<(), SaveError> {
    let report = validate(s);
    if report.has_errors() {
        return Err(SaveError::Invalid(report));
    }
    let path = path.as_ref();
    fs::write(path, s.to_json()).map_err(|source| SaveError::Io { path: path.to_path_buf(), source })
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Zero => serializer.serialize_u8(0),
            Cell::Forbidden => serializer.serialize_str("null"),
            Cell::Present(ids) => {
                let mut seq = serializer.serialize_seq(Some(ids.len()))?;
                for id in ids {
                    seq.serialize_element(id)?;
                }
                seq.end()
            }
        }
    }
}

struct CellVisitor;

const CELL_EXPECTED: &str = "0, \"null\" or an array of parameter ids";

impl<'de> Visitor<'de> for CellVisitor {
    type Value = Cell;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(CELL_EXPECTED)
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Cell, E> {
        if v == 0 {
            Ok(Cell::Zero)
        } else {
            Err(E::invalid_value(de::Unexpected::Unsigned(v), &self))
        }
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Cell, E> {
        if v == 0 {
            Ok(Cell::Zero)
        } else {
            Err(E::invalid_value(de::Unexpected::Signed(v), &self))
        }
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Cell, E> {
        if v == "null" {
            Ok(Cell::Forbidden)
        } else {
            Err(E::invalid_value(de::Unexpected::Str(v), &self))
        }
    }

    fn visit_unit<E: de::Error>(self) -> Result<Cell, E> {
        Err(E::custom("JSON null is not a cell; write 0 for absent or \"null\" for forbidden"))
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Cell, A::Error> {
        let mut ids = Vec::new();
        while let Some(id) = seq.next_element::<String>()? {
            ids.push(id);
        }
        Ok(Cell::Present(ids))
    }
}

impl<'de> Deserialize<'de> for Cell {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Cell, D::Error> {
        deserializer.deserialize_any(CellVisitor)
    }
}

const MATHML_PREFIX: &str = "mathml:";

fn parse_form<E: de::Error>(text: &str) -> Result<crate::expr::Expr, E> {
    match text.strip_prefix(MATHML_PREFIX) {
        Some(doc) => crate::expr::parse_mathml(doc).map_err(E::custom),
        None => crate::expr::parse_expr(text).map_err(E::custom),
    }
}

/// An MRS form: infix text, or Content-MathML after a `mathml:` prefix.
pub(crate) mod form {
    use super::*;
    use crate::expr::Expr;

    pub fn serialize<S: Serializer>(e: &Expr, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(e)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Expr, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_form(&text)
    }
}

pub(crate) mod forms {
    use super::*;
    use crate::expr::Expr;

    pub fn serialize<S: Serializer>(es: &[Expr], serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(es.iter().map(|e| e.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Vec<Expr>, D::Error> {
        let texts = Vec::<String>::deserialize(deserializer)?;
        texts.iter().map(|t| parse_form(t)).collect()
    }
}

/// MKM refs keyed by `"r,c,k"`.
pub(super) mod refs {
    use std::collections::BTreeMap;

    use super::*;
    use crate::expr::ParamRef;

    pub fn serialize<S: Serializer>(
        refs: &BTreeMap<ParamRef, Vec<usize>>,
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        serializer.collect_map(refs.iter().map(|(p, items)| (format!("{},{},{}", p.row, p.col, p.k), items)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<BTreeMap<ParamRef, Vec<usize>>, D::Error> {
        let raw = BTreeMap::<String, Vec<usize>>::deserialize(deserializer)?;
        raw.into_iter()
            .map(|(key, items)| {
                let parts: Vec<usize> = key
                    .split(',')
                    .map(|p| p.trim().parse::<usize>().ok().filter(|&n| n >= 1))
                    .collect::<Option<_>>()
                    .ok_or_else(|| de::Error::custom(format!("bad MKM key `{key}`; expected \"r,c,k\"")))?;
                match parts.as_slice() {
                    [r, c, k] => Ok((ParamRef::new(*r, *c, *k), items)),
                    _ => Err(de::Error::custom(format!("bad MKM key `{key}`; expected \"r,c,k\""))),
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn misspelled_forbidden_marker_points_at_cell() {
        let text = r#"{
            "variables": [{"id": "X", "label": "x"}, {"id": "Y", "label": "y"}],
            "parameters": [],
            "mrm": {"rows": ["dX/dt"], "cells": [[0, "nul"]]},
            "mrs": {"rows": [{"primary": "0"}]}
        }"#;
        match Sskr::from_json(text) {
            Err(LoadError::Schema { pointer, .. }) => assert_eq!(pointer, "/mrm/cells/0/1"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn json_null_cell_is_rejected() {
        let text = r#"{"variables": [{"id": "X", "label": "x"}],
            "mrm": {"rows": ["dX/dt"], "cells": [[null]]}}"#;
        assert!(matches!(Sskr::from_json(text), Err(LoadError::Schema { .. })));
    }

    #[test]
    fn bad_expression_and_refs_are_schema_errors() {
        let text = r#"{"mrs": {"rows": [{"primary": "1 +* 2"}]}}"#;
        match Sskr::from_json(text) {
            Err(LoadError::Schema { pointer, .. }) => assert_eq!(pointer, "/mrs/rows/0/primary"),
            other => panic!("{other:?}"),
        }
        let text = r#"{"mkm": {"items": [], "refs": {"1,2": [1]}}}"#;
        assert!(matches!(Sskr::from_json(text), Err(LoadError::Schema { .. })));
    }

    #[test]
    fn mathml_forms_load() {
        let text = r#"{"variables": [{"id": "X", "label": "x"}],
            "mrm": {"rows": ["dX/dt"], "cells": [[[]]]},
            "mrs": {"rows": [{"primary": "mathml:<apply><minus/><ci>v(1)</ci></apply>"}]}}"#;
        let s = Sskr::from_json(text).unwrap();
        assert_eq!(s.mrs.rows[0].primary.to_string(), "-v(1)");
        assert_eq!(Sskr::from_json(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn empty_model_round_trips() {
        let s = Sskr::default();
        assert_eq!(Sskr::from_json(&s.to_json()).unwrap(), s);
        assert_eq!(Sskr::from_json("{}").unwrap(), s);
    }
}
