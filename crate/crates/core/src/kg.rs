//! In-memory triple store: ingestion, exact lookup, fuzzy candidate
//! retrieval and one-hop subgraph extraction.
//!
//! Triples are kept sorted by `(head, relation, tail)` and deduplicated, so a
//! graph's query behavior never depends on the order of its source records.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::similarity::{base_name, bigrams, edit_similarity, sim_score};

#[derive(Debug, Error)]
pub enum KgError {
    #[error("line {line}: {reason}: {raw:?}")]
    Malformed {
        line: usize,
        raw: String,
        reason: String,
    },
    #[error("invalid triple: {0}")]
    InvalidTriple(String),
    #[error("reading triples: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub head: String,
    pub relation: String,
    pub tail: String,
}

impl Triple {
    /// Builds a triple from trimmed fields; head, relation and tail must be
    /// non-empty.
    pub fn new(
        head: impl AsRef<str>,
        relation: impl AsRef<str>,
        tail: impl AsRef<str>,
    ) -> Result<Self, KgError> {
        let head = head.as_ref().trim();
        let relation = relation.as_ref().trim();
        let tail = tail.as_ref().trim();
        for (field, value) in [("head", head), ("relation", relation), ("tail", tail)] {
            if value.is_empty() {
                return Err(KgError::InvalidTriple(format!("empty {field}")));
            }
        }
        Ok(Self {
            head: head.to_owned(),
            relation: relation.to_owned(),
            tail: tail.to_owned(),
        })
    }
}

/// Bigram postings over a sorted name list, used to find related names
/// without scanning the whole vocabulary.
#[derive(Debug, Default)]
struct FuzzyIndex {
    names: Vec<String>,
    postings: HashMap<(char, char), Vec<u32>>,
    /// Names whose base name is a single character and therefore has no
    /// bigram to be found through.
    short_bases: Vec<u32>,
    by_base: HashMap<String, Vec<u32>>,
}

impl FuzzyIndex {
    fn build<'a>(names: impl Iterator<Item = &'a String>) -> Self {
        let names: Vec<String> = names.cloned().collect();
        let mut postings: HashMap<(char, char), Vec<u32>> = HashMap::new();
        let mut short_bases = Vec::new();
        let mut by_base: HashMap<String, Vec<u32>> = HashMap::new();
        for (id, name) in names.iter().enumerate() {
            let id = id as u32;
            let mut grams = bigrams(name);
            grams.sort_unstable();
            grams.dedup();
            for g in grams {
                postings.entry(g).or_default().push(id);
            }
            let base = base_name(name);
            if base.chars().count() < 2 {
                short_bases.push(id);
            }
            by_base.entry(base.to_owned()).or_default().push(id);
        }
        Self {
            names,
            postings,
            short_bases,
            by_base,
        }
    }

    fn lookup(&self, mention: &str, limit: usize) -> Vec<String> {
        if limit == 0 || mention.is_empty() || self.names.is_empty() {
            return Vec::new();
        }
        let pool: Vec<u32> = if mention.chars().count() < 2 {
            (0..self.names.len() as u32).collect()
        } else {
            let mut ids: Vec<u32> = bigrams(mention)
                .iter()
                .filter_map(|g| self.postings.get(g))
                .flatten()
                .chain(self.short_bases.iter())
                .copied()
                .collect();
            ids.sort_unstable();
            ids.dedup();
            ids
        };

        let mut exact = None;
        let mut contained = Vec::new();
        let mut fuzzy = Vec::new();
        for id in pool {
            let name = self.names[id as usize].as_str();
            match relatedness(mention, name) {
                Some(Relatedness::Exact) => exact = Some(name),
                Some(Relatedness::Containment(score)) => contained.push((score, name)),
                Some(Relatedness::Edit(score)) => fuzzy.push((score, name)),
                None => {}
            }
        }
        rank_candidates(exact, contained, fuzzy, limit)
    }

    fn with_base(&self, base: &str) -> impl Iterator<Item = &str> {
        self.by_base
            .get(base)
            .into_iter()
            .flatten()
            .map(|id| self.names[*id as usize].as_str())
    }
}

/// How a candidate name relates to a mention under the candidate-retrieval
/// rule. `None` means the name is not a candidate at all.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Relatedness {
    /// Name equals the mention.
    Exact,
    /// Name contains the mention, or the mention contains the name's base
    /// (qualifier-stripped) form; carries the bigram Dice score.
    Containment(f64),
    /// Shares a bigram with the mention (or the mention is a single
    /// character); carries the better of the edit similarities against the
    /// full name and its base form.
    Edit(f64),
}

/// Scores one candidate name against a mention. Exposed so the ranking rule
/// can be checked by exhaustive scans.
pub fn relatedness(mention: &str, name: &str) -> Option<Relatedness> {
    if name == mention {
        return Some(Relatedness::Exact);
    }
    let base = base_name(name);
    if name.contains(mention) || (!base.is_empty() && mention.contains(base)) {
        return Some(Relatedness::Containment(sim_score(mention, name)));
    }
    let short = mention.chars().count() < 2;
    if short || crate::similarity::shares_bigram(mention, name) {
        let score = edit_similarity(mention, name).max(edit_similarity(mention, base));
        return Some(Relatedness::Edit(score));
    }
    None
}

/// Exact match first, then containment matches by descending Dice, then the
/// best `limit` edit-similarity matches; ties lexicographic; at most `limit`.
pub fn rank_candidates(
    exact: Option<&str>,
    mut contained: Vec<(f64, &str)>,
    mut fuzzy: Vec<(f64, &str)>,
    limit: usize,
) -> Vec<String> {
    let by_score = |a: &(f64, &str), b: &(f64, &str)| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1));
    contained.sort_by(by_score);
    fuzzy.sort_by(by_score);
    fuzzy.truncate(limit);
    exact
        .into_iter()
        .chain(contained.into_iter().map(|(_, n)| n))
        .chain(fuzzy.into_iter().map(|(_, n)| n))
        .take(limit)
        .map(str::to_owned)
        .collect()
}

/// Immutable knowledge graph with entity set (distinct heads) and relation
/// set (distinct relations).
#[derive(Debug, Default)]
pub struct KnowledgeGraph {
    triples: Vec<Triple>,
    entity_index: HashMap<String, Range<usize>>,
    tail_index: HashMap<String, Vec<usize>>,
    relation_index: HashMap<String, Vec<usize>>,
    entity_names: BTreeSet<String>,
    relation_names: BTreeSet<String>,
    entity_fuzzy: FuzzyIndex,
    relation_fuzzy: FuzzyIndex,
}

impl KnowledgeGraph {
    pub fn from_triples(triples: impl IntoIterator<Item = Triple>) -> Self {
        let mut triples: Vec<Triple> = triples.into_iter().collect();
        triples.sort();
        triples.dedup();

        let mut entity_index: HashMap<String, Range<usize>> = HashMap::new();
        let mut tail_index: HashMap<String, Vec<usize>> = HashMap::new();
        let mut relation_index: HashMap<String, Vec<usize>> = HashMap::new();
        let mut start = 0;
        for i in 0..triples.len() {
            let t = &triples[i];
            if i + 1 == triples.len() || triples[i + 1].head != t.head {
                entity_index.insert(t.head.clone(), start..i + 1);
                start = i + 1;
            }
            tail_index.entry(t.tail.clone()).or_default().push(i);
            relation_index.entry(t.relation.clone()).or_default().push(i);
        }
        let entity_names: BTreeSet<String> = entity_index.keys().cloned().collect();
        let relation_names: BTreeSet<String> = relation_index.keys().cloned().collect();
        let entity_fuzzy = FuzzyIndex::build(entity_names.iter());
        let relation_fuzzy = FuzzyIndex::build(relation_names.iter());
        Self {
            triples,
            entity_index,
            tail_index,
            relation_index,
            entity_names,
            relation_names,
            entity_fuzzy,
            relation_fuzzy,
        }
    }

    pub fn load_path(path: impl AsRef<Path>) -> Result<Self, KgError> {
        let file = File::open(path)?;
        load_triples(BufReader::new(file))
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn entity_names(&self) -> &BTreeSet<String> {
        &self.entity_names
    }

    pub fn relation_names(&self) -> &BTreeSet<String> {
        &self.relation_names
    }

    pub fn has_entity(&self, name: &str) -> bool {
        self.entity_index.contains_key(name)
    }

    /// Entities whose qualifier-stripped name equals `base`, sorted.
    pub fn entities_with_base(&self, base: &str) -> impl Iterator<Item = &str> {
        self.entity_fuzzy.with_base(base)
    }

    /// All triples whose head is `entity`, ordered by relation then tail.
    pub fn one_hop_subgraph(&self, entity: &str) -> &[Triple] {
        match self.entity_index.get(entity) {
            Some(range) => &self.triples[range.clone()],
            None => &[],
        }
    }

    /// All triples whose tail is `value`, ordered by head, relation.
    pub fn incoming(&self, value: &str) -> impl Iterator<Item = &Triple> {
        self.tail_index
            .get(value)
            .into_iter()
            .flatten()
            .map(|i| &self.triples[*i])
    }

    pub fn with_relation(&self, relation: &str) -> impl Iterator<Item = &Triple> {
        self.relation_index
            .get(relation)
            .into_iter()
            .flatten()
            .map(|i| &self.triples[*i])
    }

    pub fn find_relative_entities(&self, mention: &str, limit: usize) -> Vec<String> {
        self.entity_fuzzy.lookup(mention, limit)
    }

    pub fn find_relative_relations(&self, mention: &str, limit: usize) -> Vec<String> {
        self.relation_fuzzy.lookup(mention, limit)
    }
}

/// Reads triple records (three CSV fields per line; `#` comments and blank
/// lines skipped) into a graph. An empty source yields an empty graph.
pub fn load_triples<R: BufRead>(source: R) -> Result<KnowledgeGraph, KgError> {
    let mut triples = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let mut text = line.trim_end_matches('\r');
        if lineno == 1 {
            text = text.trim_start_matches('\u{feff}');
        }
        if text.trim().is_empty() || text.trim_start().starts_with('#') {
            continue;
        }
        triples.push(parse_record(text, lineno)?);
    }
    Ok(KnowledgeGraph::from_triples(triples))
}

fn parse_record(text: &str, line: usize) -> Result<Triple, KgError> {
    let malformed = |reason: String| KgError::Malformed {
        line,
        raw: text.to_owned(),
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut record = csv::StringRecord::new();
    match reader.read_record(&mut record) {
        Ok(true) => {}
        Ok(false) => return Err(malformed("no fields".into())),
        Err(e) => return Err(malformed(e.to_string())),
    }
    if record.len() != 3 {
        return Err(malformed(format!("expected 3 fields, found {}", record.len())));
    }
    Triple::new(&record[0], &record[1], &record[2]).map_err(|e| malformed(e.to_string()))
}

/// Writes triples in the same CSV record format `load_triples` reads.
pub fn write_triples<'a, W: Write>(
    triples: impl IntoIterator<Item = &'a Triple>,
    sink: W,
) -> Result<(), KgError> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
    for t in triples {
        writer
            .write_record([&t.head, &t.relation, &t.tail])
            .map_err(|e| KgError::Io(io::Error::other(e)))?;
    }
    writer.flush()?;
    Ok(())
}
