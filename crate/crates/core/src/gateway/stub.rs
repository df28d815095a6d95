//! Deterministic offline backend. Every response is a pure function of the
//! request's [`Task`].

use std::collections::{BTreeSet, HashMap};
use std::io::BufRead;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use super::{GatewayError, ModelBackend, ModelRequest, Task};
use crate::kg::Triple;
use crate::similarity::{shares_bigram, sim_score};

#[derive(Debug, Error)]
pub enum TranslationTableError {
    #[error("cannot read translation table: {0}")]
    Io(#[from] std::io::Error),
    #[error("translation table line {line}: {message}")]
    Malformed { line: usize, message: String },
}

#[derive(Deserialize)]
struct TableRow {
    question: String,
    cql: Option<String>,
}

#[derive(Debug, Clone)]
pub struct StubBackend {
    id: String,
    translations: HashMap<String, String>,
}

impl Default for StubBackend {
    fn default() -> Self {
        Self {
            id: "stub".into(),
            translations: HashMap::new(),
        }
    }
}

impl StubBackend {
    pub fn with_translations<Q, C>(pairs: impl IntoIterator<Item = (Q, C)>) -> Self
    where
        Q: Into<String>,
        C: Into<String>,
    {
        Self {
            translations: pairs
                .into_iter()
                .map(|(q, c)| (q.into().trim().to_owned(), c.into()))
                .collect(),
            ..Self::default()
        }
    }

    /// Reads a JSON-lines table of `{"question": .., "cql": ..}` objects.
    /// Extra keys are ignored and rows without `cql` are skipped, so a
    /// dataset file with gold queries doubles as a perfect translator.
    pub fn load_translations(path: impl AsRef<Path>) -> Result<Self, TranslationTableError> {
        let file = std::fs::File::open(path)?;
        let mut pairs = Vec::new();
        for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: TableRow = serde_json::from_str(&line).map_err(|e| TranslationTableError::Malformed {
                line: i + 1,
                message: e.to_string(),
            })?;
            if let Some(cql) = row.cql {
                pairs.push((row.question, cql));
            }
        }
        Ok(Self::with_translations(pairs))
    }

    pub fn translation_count(&self) -> usize {
        self.translations.len()
    }
}

impl ModelBackend for StubBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &ModelRequest) -> Result<String, GatewayError> {
        Ok(match &request.task {
            Task::Translate { question } => self
                .translations
                .get(question.trim())
                .cloned()
                .unwrap_or_default(),
            Task::Select {
                mention, candidates, ..
            } => most_similar(mention, candidates).unwrap_or_default().to_owned(),
            Task::Read { question, triples, .. } => grounded_tails(question, triples)
                .iter()
                .map(|t| format!("ANSWER: {t}"))
                .collect::<Vec<_>>()
                .join("\n"),
        })
    }
}

/// The candidate with the highest bigram similarity to `mention`. An exact
/// match always wins; remaining ties go to the lexicographically smallest.
pub fn most_similar<'a>(mention: &str, candidates: &'a [String]) -> Option<&'a str> {
    if let Some(exact) = candidates.iter().find(|c| *c == mention) {
        return Some(exact);
    }
    candidates
        .iter()
        .map(|c| (sim_score(mention, c), c))
        .max_by(|(sa, a), (sb, b)| sa.total_cmp(sb).then_with(|| b.cmp(a)))
        .map(|(_, c)| c.as_str())
}

/// Tails of the triples whose relation shares a character bigram with the
/// question (both lowercased). When none does, every tail is returned.
pub fn grounded_tails(question: &str, triples: &[Triple]) -> BTreeSet<String> {
    let question = question.to_lowercase();
    let related: BTreeSet<String> = triples
        .iter()
        .filter(|t| shares_bigram(&t.relation.to_lowercase(), &question))
        .map(|t| t.tail.clone())
        .collect();
    if related.is_empty() {
        triples.iter().map(|t| t.tail.clone()).collect()
    } else {
        related
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(h: &str, r: &str, tail: &str) -> Triple {
        Triple::new(h, r, tail).unwrap()
    }

    #[test]
    fn selector_singleton_returns_mention() {
        let c = vec!["Joan Lin".to_string()];
        assert_eq!(most_similar("Joan Lin", &c), Some("Joan Lin"));
        assert_eq!(most_similar("x", &[]), None);
    }

    #[test]
    fn selector_prefers_qualified_full_name() {
        let c = vec!["China".to_string(), "Jackie Chan [Hong Kong actor]".to_string()];
        assert_eq!(most_similar("Jackie Chan", &c), Some("Jackie Chan [Hong Kong actor]"));
    }

    #[test]
    fn reader_keeps_relations_sharing_a_bigram() {
        let triples = [
            t("China", "capital", "Beijing"),
            t("China", "currency", "Renminbi"),
        ];
        let tails = grounded_tails("What is the capital of China?", &triples);
        assert_eq!(tails.into_iter().collect::<Vec<_>>(), ["Beijing"]);
        let all = grounded_tails("zzz", &triples);
        assert_eq!(all.len(), 2);
    }

    #[test]
    fn translator_table_lookup() {
        let stub = StubBackend::with_translations([("q1", "match x")]);
        assert_eq!(stub.complete(&ModelRequest::translate(" q1 ")).unwrap(), "match x");
        assert_eq!(stub.complete(&ModelRequest::translate("q2")).unwrap(), "");
    }
}
