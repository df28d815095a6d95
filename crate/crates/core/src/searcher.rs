//! Retrieval workflow: find the question's topic entities, collect their
//! one-hop triples, verbalize them and let a reader model pick answers.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answer::AnswerSet;
use crate::gateway::{Gateway, GatewayError, ModelRequest};
use crate::kg::{KnowledgeGraph, Triple};
use crate::similarity::base_name;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("entity extraction failed: {0}")]
    Extractor(GatewayError),
    #[error("reader failed: {0}")]
    Reader(GatewayError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Upper bound on verbalized triples per question.
    pub max_triples: usize,
    /// Also retrieve triples whose tail is a topic entity.
    pub include_incoming: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            max_triples: 200,
            include_incoming: false,
        }
    }
}

/// Finds the graph entities a question is about.
pub trait EntityExtractor: Sync {
    fn extract(&self, question: &str, graph: &KnowledgeGraph) -> Result<Vec<String>, GatewayError>;
}

/// Longest-match dictionary lookup over entity names.
///
/// Scans left to right and at each position takes the longest graph name
/// that starts there and sits on word boundaries. A name matches either in
/// full or by its base (the name without a trailing `[qualifier]`); a base
/// match yields every entity with that base unless one of them is exactly
/// the matched text.
#[derive(Debug, Clone, Copy, Default)]
pub struct DictionaryExtractor;

impl EntityExtractor for DictionaryExtractor {
    fn extract(&self, question: &str, graph: &KnowledgeGraph) -> Result<Vec<String>, GatewayError> {
        Ok(dictionary_entities(question, graph))
    }
}

fn is_word_char(c: Option<char>) -> bool {
    c.is_some_and(char::is_alphanumeric)
}

pub fn dictionary_entities(question: &str, graph: &KnowledgeGraph) -> Vec<String> {
    let mut surfaces: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for name in graph.entity_names() {
        surfaces.entry(name.as_str()).or_default().insert(name);
        let base = base_name(name);
        if !base.is_empty() && base != name {
            surfaces.entry(base).or_default().insert(name);
        }
    }
    let mut lengths: Vec<usize> = surfaces.keys().map(|s| s.len()).collect::<BTreeSet<_>>().into_iter().collect();
    lengths.reverse();

    let mut found = Vec::new();
    let mut seen = HashSet::new();
    let mut at = 0;
    while at < question.len() {
        let before = question[..at].chars().next_back();
        let mut advanced = false;
        if !is_word_char(before) || !is_word_char(question[at..].chars().next()) {
            for &len in &lengths {
                let end = at + len;
                if end > question.len() || !question.is_char_boundary(end) {
                    continue;
                }
                let text = &question[at..end];
                let Some(names) = surfaces.get(text) else { continue };
                let last = text.chars().next_back();
                let next = question[end..].chars().next();
                if is_word_char(last) && is_word_char(next) {
                    continue;
                }
                let picks: Vec<&str> = if names.contains(text) {
                    vec![text]
                } else {
                    names.iter().copied().collect()
                };
                for p in picks {
                    if seen.insert(p) {
                        found.push(p.to_owned());
                    }
                }
                at = end;
                advanced = true;
                break;
            }
        }
        if !advanced {
            at += question[at..].chars().next().map_or(1, char::len_utf8);
        }
    }
    found
}

/// Maps free-form mentions to their best graph entity. Mentions with no
/// related entity are dropped.
pub fn link_mentions(mentions: &[String], graph: &KnowledgeGraph) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for m in mentions {
        if let Some(top) = graph.find_relative_entities(m, 1).into_iter().next() {
            if !out.contains(&top) {
                out.push(top);
            }
        }
    }
    out
}

/// Wraps a mention source (a model or any other tagger) and links its raw
/// output to graph entities.
pub struct LinkingExtractor<F> {
    source: F,
}

impl<F> LinkingExtractor<F>
where
    F: Fn(&str) -> Result<Vec<String>, GatewayError> + Sync,
{
    pub fn new(source: F) -> Self {
        Self { source }
    }
}

impl<F> EntityExtractor for LinkingExtractor<F>
where
    F: Fn(&str) -> Result<Vec<String>, GatewayError> + Sync,
{
    fn extract(&self, question: &str, graph: &KnowledgeGraph) -> Result<Vec<String>, GatewayError> {
        Ok(link_mentions(&(self.source)(question)?, graph))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalContext {
    pub topic_entities: Vec<String>,
    pub triples: Vec<Triple>,
    pub verbalized: String,
}

impl RetrievalContext {
    pub fn build(topic_entities: Vec<String>, graph: &KnowledgeGraph, config: &SearchConfig) -> Self {
        let mut seen = HashSet::new();
        let mut triples = Vec::new();
        for e in &topic_entities {
            let incoming: Vec<&Triple> = if config.include_incoming {
                graph.incoming(e).collect()
            } else {
                Vec::new()
            };
            for t in graph.one_hop_subgraph(e).iter().chain(incoming) {
                if seen.insert(t) {
                    triples.push(t.clone());
                }
            }
        }
        triples.truncate(config.max_triples);
        let verbalized = verbalize(&triples);
        Self {
            topic_entities,
            triples,
            verbalized,
        }
    }
}

/// One sentence per triple, "The {relation} of {head} is {tail}.", joined
/// by single spaces.
pub fn verbalize(triples: &[Triple]) -> String {
    triples
        .iter()
        .map(|t| format!("The {} of {} is {}.", t.relation, t.head, t.tail))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Answers from lines of the form `ANSWER: value` (prefix case-insensitive).
pub fn parse_answer_lines(text: &str) -> AnswerSet {
    const PREFIX: &str = "answer:";
    text.lines()
        .filter_map(|line| {
            let line = line.trim();
            let head = line.get(..PREFIX.len())?;
            head.eq_ignore_ascii_case(PREFIX).then(|| line[PREFIX.len()..].trim())
        })
        .filter(|a| !a.is_empty())
        .collect()
}

/// Reads answers off a retrieval context.
pub trait Reader: Sync {
    fn read(&self, question: &str, context: &RetrievalContext) -> Result<AnswerSet, GatewayError>;
}

impl Reader for Gateway {
    fn read(&self, question: &str, context: &RetrievalContext) -> Result<AnswerSet, GatewayError> {
        let request = ModelRequest::read(question, &context.triples, &context.verbalized);
        Ok(parse_answer_lines(&self.generate(&request)?.text))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Retrieval {
    pub context: RetrievalContext,
    pub answers: AnswerSet,
}

/// Runs extraction, retrieval and reading. The reader is not consulted when
/// nothing was retrieved.
pub fn answer_by_retrieval(
    question: &str,
    graph: &KnowledgeGraph,
    extractor: &dyn EntityExtractor,
    reader: &dyn Reader,
    config: &SearchConfig,
) -> Result<Retrieval, SearchError> {
    let topics = extractor.extract(question, graph).map_err(SearchError::Extractor)?;
    let context = RetrievalContext::build(topics, graph, config);
    let answers = if context.triples.is_empty() {
        AnswerSet::new()
    } else {
        reader.read(question, &context).map_err(SearchError::Reader)?
    };
    Ok(Retrieval { context, answers })
}
