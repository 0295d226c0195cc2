//! Constrained near-natural-language statements.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// A verb phrase of the lexicon with the number of objects it takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Verb {
    pub phrase: &'static str,
    pub min_objects: usize,
    pub max_objects: usize,
}

const fn verb(phrase: &'static str, min_objects: usize, max_objects: usize) -> Verb {
    Verb { phrase, min_objects, max_objects }
}

pub const LEXICON: &[Verb] = &[
    verb("positively regulates", 1, 1),
    verb("is transcribed into", 1, 1),
    verb("is translated into", 1, 1),
    verb("degrades", 0, 0),
    verb("dimerizes to form", 1, 1),
    verb("dissociates into", 1, 2),
    verb("binds", 2, 2),
    // source, substance, location, product
    verb("secretes", 3, 3),
    verb("diffuses", 0, 0),
    verb("decays", 0, 0),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Entity {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub code: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// The entity's own code followed by its broader classes.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub classes: Vec<String>,
}

impl Entity {
    pub fn new(name: impl Into<String>) -> Entity {
        Entity { name: name.into(), code: None, label: None, classes: Vec::new() }
    }

    /// Symbol used for the entity in model expressions.
    pub fn symbol(&self) -> String {
        self.name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Statement {
    pub raw: String,
    pub subject: Entity,
    pub verb: Verb,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub process_code: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub process_label: Option<String>,
    pub objects: Vec<Entity>,
}

impl Statement {
    pub fn is_annotated(&self) -> bool {
        self.process_code.is_some()
            && self.subject.code.is_some()
            && self.objects.iter().all(|o| o.code.is_some())
    }

    /// The statement with entities replaced by their ontology labels.
    pub fn annotated_text(&self) -> String {
        let name = |e: &Entity| e.label.clone().unwrap_or_else(|| e.name.clone());
        let mut words = vec![name(&self.subject), self.verb.phrase.to_string()];
        words.extend(self.objects.iter().map(name));
        words.join(" ")
    }

    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        std::iter::once(&self.subject).chain(&self.objects)
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatementError {
    #[error("empty statement")]
    Empty,
    #[error("unknown verb `{0}`")]
    UnknownVerb(String),
    #[error("`{verb}` takes {} object(s), found {found}", arity(.min, .max))]
    ArityMismatch { verb: &'static str, min: usize, max: usize, found: usize },
}

fn arity(min: &usize, max: &usize) -> String {
    if min == max {
        min.to_string()
    } else {
        format!("{min} to {max}")
    }
}

fn words(text: &str) -> Vec<&str> {
    text.trim().trim_end_matches('.').split_whitespace().collect()
}

/// Longest declared entity starting at `at`, else the single token there.
fn entity_at(tokens: &[&str], at: usize, entities: &[Vec<&str>]) -> usize {
    entities
        .iter()
        .filter(|e| tokens.get(at..at + e.len()) == Some(e.as_slice()))
        .map(Vec::len)
        .max()
        .unwrap_or(1)
}

fn verb_at(tokens: &[&str], at: usize) -> Option<(Verb, usize)> {
    LEXICON
        .iter()
        .map(|v| (*v, v.phrase.split(' ').collect::<Vec<_>>()))
        .filter(|(_, w)| tokens.get(at..at + w.len()) == Some(w.as_slice()))
        .max_by_key(|(_, w)| w.len())
        .map(|(v, w)| (v, w.len()))
}

pub fn parse_statement(text: &str) -> Result<Statement, StatementError> {
    parse_statement_with(text, &[])
}

/// Parses with multiword entity names matched longest-first.
pub fn parse_statement_with(text: &str, entities: &[&str]) -> Result<Statement, StatementError> {
    let tokens = words(text);
    if tokens.is_empty() {
        return Err(StatementError::Empty);
    }
    let known: Vec<Vec<&str>> = entities.iter().map(|e| e.split_whitespace().collect()).collect();
    let join = |from: usize, len: usize| tokens[from..from + len].join(" ");

    let subject_len = entity_at(&tokens, 0, &known);
    let subject = Entity::new(join(0, subject_len));
    let mut at = subject_len;
    let (verb, verb_len) = match verb_at(&tokens, at) {
        Some(found) => found,
        None => return Err(StatementError::UnknownVerb(tokens.get(at).copied().unwrap_or("").to_string())),
    };
    at += verb_len;
    let mut objects = Vec::new();
    while at < tokens.len() {
        let len = entity_at(&tokens, at, &known);
        objects.push(Entity::new(join(at, len)));
        at += len;
    }
    if objects.len() < verb.min_objects || objects.len() > verb.max_objects {
        return Err(StatementError::ArityMismatch {
            verb: verb.phrase,
            min: verb.min_objects,
            max: verb.max_objects,
            found: objects.len(),
        });
    }
    Ok(Statement {
        raw: tokens.join(" "),
        subject,
        verb,
        process_code: None,
        process_label: None,
        objects,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gene_network_forms() {
        let s = parse_statement("P2 positively regulates G").unwrap();
        assert_eq!(s.subject.name, "P2");
        assert_eq!(s.verb.phrase, "positively regulates");
        assert_eq!(s.objects, vec![Entity::new("G")]);

        let s = parse_statement("R degrades").unwrap();
        assert_eq!(s.subject.name, "R");
        assert!(s.objects.is_empty());
        assert_eq!(parse_statement("P dimerizes to form P2.").unwrap().raw, "P dimerizes to form P2");
    }

    #[test]
    fn errors() {
        assert_eq!(parse_statement("P2 juggles G"), Err(StatementError::UnknownVerb("juggles".into())));
        assert_eq!(parse_statement("   "), Err(StatementError::Empty));
        assert!(matches!(
            parse_statement("R degrades P"),
            Err(StatementError::ArityMismatch { verb: "degrades", found: 1, .. })
        ));
        assert!(matches!(parse_statement("G is transcribed into"), Err(StatementError::ArityMismatch { .. })));
    }

    #[test]
    fn multiword_entities_match_longest_first() {
        let s = parse_statement_with("muc2 gene is transcribed into muc2 mRNA", &["muc2", "muc2 gene", "muc2 mRNA"])
            .unwrap();
        assert_eq!(s.subject.name, "muc2 gene");
        assert_eq!(s.objects[0].name, "muc2 mRNA");
        assert_eq!(s.objects[0].symbol(), "muc2_mRNA");
        let s = parse_statement_with("AB_E dissociates into A_E B_E", &[]).unwrap();
        assert_eq!(s.objects.len(), 2);
    }
}
