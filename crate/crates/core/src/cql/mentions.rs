//! Raw-text extraction and in-place replacement of entity and relation
//! names. Works on query text directly, so it also handles queries that do
//! not fully parse.

use std::fmt;
use std::ops::Range;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::render::escape;
use super::CqlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MentionKind {
    Entity,
    Relation,
}

impl fmt::Display for MentionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MentionKind::Entity => "entity",
            MentionKind::Relation => "relation",
        })
    }
}

/// One `name:"..."` occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mention {
    /// Unescaped name.
    pub value: String,
    /// Byte span of the quoted literal, quotes included.
    pub span: Range<usize>,
    pub quote: char,
}

const QUOTED: &str = r#"(?:"((?:[^"\\]|\\.)*)"|'((?:[^'\\]|\\.)*)')"#;

fn pattern(kind: MentionKind) -> &'static Regex {
    static ENTITY: OnceLock<Regex> = OnceLock::new();
    static RELATION: OnceLock<Regex> = OnceLock::new();
    let (cell, label) = match kind {
        MentionKind::Entity => (&ENTITY, "ENTITY"),
        MentionKind::Relation => (&RELATION, "Relationship"),
    };
    cell.get_or_init(|| {
        Regex::new(&format!(r"(?is):\s*{label}\s*\{{\s*name\s*:\s*{QUOTED}")).expect("mention regex")
    })
}

fn unescape(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut chars = raw.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                Some(e) => out.push(e),
                None => {}
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// All mentions of `kind` in textual order, duplicates kept.
pub fn mentions(text: &str, kind: MentionKind) -> Vec<Mention> {
    pattern(kind)
        .captures_iter(text)
        .filter_map(|caps| {
            let (inner, quote) = match (caps.get(1), caps.get(2)) {
                (Some(m), _) => (m, '"'),
                (None, Some(m)) => (m, '\''),
                _ => return None,
            };
            Some(Mention {
                value: unescape(inner.as_str()),
                span: inner.start() - 1..inner.end() + 1,
                quote,
            })
        })
        .collect()
}

pub fn extract_entities(text: &str) -> Vec<String> {
    mentions(text, MentionKind::Entity).into_iter().map(|m| m.value).collect()
}

pub fn extract_relations(text: &str) -> Vec<String> {
    mentions(text, MentionKind::Relation).into_iter().map(|m| m.value).collect()
}

/// Replaces the `occurrence`-th mention (0-based, counting only mentions
/// equal to `old`) of `kind` with `new`. Everything else stays
/// byte-identical; replacing a name with itself returns the input unchanged.
pub fn substitute(
    text: &str,
    old: &str,
    new: &str,
    kind: MentionKind,
    occurrence: usize,
) -> Result<String, CqlError> {
    let found = mentions(text, kind)
        .into_iter()
        .filter(|m| m.value == old)
        .nth(occurrence)
        .ok_or_else(|| CqlError::Substitution {
            kind,
            mention: old.to_owned(),
            index: occurrence,
        })?;
    Ok(splice(text, &found, new))
}

/// Replaces the mention at `position` among all mentions of `kind`.
pub fn substitute_at(
    text: &str,
    kind: MentionKind,
    position: usize,
    new: &str,
) -> Result<String, CqlError> {
    let all = mentions(text, kind);
    let found = all.get(position).ok_or_else(|| CqlError::Substitution {
        kind,
        mention: String::new(),
        index: position,
    })?;
    Ok(splice(text, found, new))
}

fn splice(text: &str, at: &Mention, new: &str) -> String {
    if at.value == new {
        return text.to_owned();
    }
    let mut out = String::with_capacity(text.len() + new.len());
    out.push_str(&text[..at.span.start]);
    out.push_str(&escape(new, at.quote));
    out.push_str(&text[at.span.end..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const JACKIE: &str = r#"match(:ENTITY{name:"Jackie Chan"})-[:Relationship{name:"classic movie"}]->(m) return distinct m.name limit 3"#;

    #[test]
    fn extracts_from_generated_query() {
        assert_eq!(extract_entities(JACKIE), vec!["Jackie Chan"]);
        assert_eq!(extract_relations(JACKIE), vec!["classic movie"]);
    }

    #[test]
    fn ordered_and_tolerant() {
        let q = r#"match (:ENTITY{name:"A"})-[:Relationship{name:"r1"}]->(m)<-[:Relationship{name:"r2"}]-(:ENTITY{name:"B"}) return m.name"#;
        assert_eq!(extract_entities(q), vec!["A", "B"]);
        assert_eq!(extract_relations(q), vec!["r1", "r2"]);
        let broken = r#"match (:ENTITY{name:"A"})-[:Relationship{name:"r1"}]->(m) retur ((("#;
        assert_eq!(extract_entities(broken), vec!["A"]);
        assert!(extract_relations("match (n) return n.name").is_empty());
        assert_eq!(extract_entities(r#"(:Entity { name : 'x\'y' })"#), vec!["x'y"]);
    }

    #[test]
    fn substitution_targets_one_occurrence() {
        let fixed = substitute(JACKIE, "Jackie Chan", "Jackie Chan [Hong Kong actor]", MentionKind::Entity, 0)
            .unwrap();
        assert_eq!(
            fixed,
            JACKIE.replace(r#""Jackie Chan""#, r#""Jackie Chan [Hong Kong actor]""#)
        );
        assert_eq!(substitute(JACKIE, "Jackie Chan", "Jackie Chan", MentionKind::Entity, 0).unwrap(), JACKIE);

        let twice = r#"(:ENTITY{name:"A"})-[:Relationship{name:"r"}]->(m)<-[:Relationship{name:"r"}]-(:ENTITY{name:"A"})"#;
        let out = substitute(twice, "A", "Z", MentionKind::Entity, 1).unwrap();
        assert_eq!(out, r#"(:ENTITY{name:"A"})-[:Relationship{name:"r"}]->(m)<-[:Relationship{name:"r"}]-(:ENTITY{name:"Z"})"#);
        let err = substitute(twice, "A", "Z", MentionKind::Entity, 2).unwrap_err();
        assert_eq!(
            err,
            CqlError::Substitution { kind: MentionKind::Entity, mention: "A".into(), index: 2 }
        );
    }

    #[test]
    fn substituted_names_are_escaped() {
        let out = substitute(JACKIE, "classic movie", "say \"hi\"", MentionKind::Relation, 0).unwrap();
        assert_eq!(extract_relations(&out), vec!["say \"hi\""]);
        assert!(super::super::parse_cql(&out).is_ok());
    }
}
