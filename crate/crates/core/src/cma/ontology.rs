//! Term-to-code ontology tables.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::statement::{Entity, Statement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Entity,
    Process,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OntologyEntry {
    pub term: String,
    pub code: String,
    pub category: Category,
    /// Human-readable class name, e.g. "messenger RNA".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Codes of broader classes the term also belongs to.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub is_a: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct OntologyTable {
    entries: Vec<OntologyEntry>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OntologyError {
    #[error("ontology file: {0}")]
    Json(String),
    #[error("term `{0}` appears twice")]
    DuplicateTerm(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnnotateError {
    #[error("unknown term `{0}`")]
    UnknownTerm(String),
}

impl OntologyTable {
    pub fn new(entries: Vec<OntologyEntry>) -> Result<OntologyTable, OntologyError> {
        for (i, e) in entries.iter().enumerate() {
            if entries[..i].iter().any(|other| other.term == e.term) {
                return Err(OntologyError::DuplicateTerm(e.term.clone()));
            }
        }
        Ok(OntologyTable { entries })
    }

    pub fn from_json(text: &str) -> Result<OntologyTable, OntologyError> {
        let entries = serde_json::from_str(text).map_err(|e| OntologyError::Json(e.to_string()))?;
        OntologyTable::new(entries)
    }

    pub fn entries(&self) -> &[OntologyEntry] {
        &self.entries
    }

    pub fn get(&self, term: &str, category: Category) -> Option<&OntologyEntry> {
        self.entries.iter().find(|e| e.term == term && e.category == category)
    }

    /// Entity terms, for multiword matching during parsing.
    pub fn entity_terms(&self) -> Vec<&str> {
        self.entries.iter().filter(|e| e.category == Category::Entity).map(|e| e.term.as_str()).collect()
    }
}

fn annotate_entity(e: &Entity, table: &OntologyTable) -> Result<Entity, AnnotateError> {
    let entry = table.get(&e.name, Category::Entity).ok_or_else(|| AnnotateError::UnknownTerm(e.name.clone()))?;
    let mut classes = vec![entry.code.clone()];
    classes.extend(entry.is_a.iter().cloned());
    Ok(Entity { name: e.name.clone(), code: Some(entry.code.clone()), label: entry.label.clone(), classes })
}

/// Attaches codes and class labels to every entity and to the process.
pub fn annotate(st: &Statement, table: &OntologyTable) -> Result<Statement, AnnotateError> {
    let process = table
        .get(st.verb.phrase, Category::Process)
        .ok_or_else(|| AnnotateError::UnknownTerm(st.verb.phrase.to_string()))?;
    Ok(Statement {
        raw: st.raw.clone(),
        subject: annotate_entity(&st.subject, table)?,
        verb: st.verb,
        process_code: Some(process.code.clone()),
        process_label: process.label.clone(),
        objects: st.objects.iter().map(|o| annotate_entity(o, table)).collect::<Result<_, _>>()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cma::parse_statement;

    fn table() -> OntologyTable {
        OntologyTable::from_json(
            r#"[
            {"term": "G", "code": "SBO:0000243", "category": "entity", "label": "gene"},
            {"term": "R", "code": "SBO:0000278", "category": "entity", "label": "messenger RNA", "is_a": ["SBO:0000240"]},
            {"term": "is transcribed into", "code": "SBO:0000183", "category": "process", "label": "transcribe"}
        ]"#,
        )
        .unwrap()
    }

    #[test]
    fn annotation_substitutes_categories() {
        let st = annotate(&parse_statement("G is transcribed into R").unwrap(), &table()).unwrap();
        assert_eq!(st.annotated_text(), "gene is transcribed into messenger RNA");
        assert_eq!(st.subject.code.as_deref(), Some("SBO:0000243"));
        assert_eq!(st.process_code.as_deref(), Some("SBO:0000183"));
        assert_eq!(st.objects[0].classes, ["SBO:0000278", "SBO:0000240"]);
        assert!(st.is_annotated());
        assert_eq!(annotate(&st, &table()).unwrap(), st);
    }

    #[test]
    fn unknown_terms() {
        let st = parse_statement("Q is transcribed into R").unwrap();
        assert_eq!(annotate(&st, &table()), Err(AnnotateError::UnknownTerm("Q".into())));
        let st = parse_statement("R degrades").unwrap();
        assert_eq!(annotate(&st, &table()), Err(AnnotateError::UnknownTerm("degrades".into())));
        let dup = r#"[{"term": "G", "code": "a", "category": "entity"}, {"term": "G", "code": "b", "category": "entity"}]"#;
        assert_eq!(OntologyTable::from_json(dup), Err(OntologyError::DuplicateTerm("G".into())));
    }
}
