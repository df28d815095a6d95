//! Shared fixtures and independent reference implementations for the
//! integration tests.

#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use kgqa::cql::{CompareOp, Condition, CqlAst, Direction, Hop, Literal, NodePattern, OrderBy, PropertyRef, ReturnItems};
use kgqa::kg::write_triples;
use kgqa::similarity::{base_name, edit_similarity, sim_score};
use kgqa::{AnswerSet, KnowledgeGraph, Triple};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde_json::json;

pub fn tiny_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/tiny")
}

pub fn tiny_graph() -> KnowledgeGraph {
    KnowledgeGraph::load_path(tiny_dir().join("tiny_kg.csv")).expect("tiny graph loads")
}

pub fn set(items: &[&str]) -> AnswerSet {
    items.iter().copied().collect()
}

pub fn three_movies() -> AnswerSet {
    set(&["Police Story", "Rush Hour", "Shinjuku Incident"])
}

pub const JACKIE_QUESTION: &str = "What are the classic movies of Jackie Chan?";
pub const JACKIE_GENERATED: &str =
    r#"match(:ENTITY{name:"Jackie Chan"})-[:Relationship{name:"classic movie"}]->(m) return distinct m.name limit 3"#;

// ---------------------------------------------------------------------------
// Random graphs and queries for the executor oracle.

pub const ENTITY_POOL: &[&str] = &["a", "b", "c", "d", "e", "7", "12", "3.5"];
pub const RELATION_POOL: &[&str] = &["r", "s", "t"];

pub fn random_triples(rng: &mut StdRng, max: usize) -> Vec<Triple> {
    let n = rng.gen_range(0..=max);
    (0..n)
        .map(|_| {
            Triple::new(
                ENTITY_POOL.choose(rng).unwrap(),
                RELATION_POOL.choose(rng).unwrap(),
                ENTITY_POOL.choose(rng).unwrap(),
            )
            .unwrap()
        })
        .collect()
}

fn random_literal(rng: &mut StdRng) -> Literal {
    match rng.gen_range(0..3) {
        0 => Literal::Str(["a", "c", "e", "12", "b5", "3"].choose(rng).unwrap().to_string()),
        1 => Literal::Int(rng.gen_range(-2..15)),
        _ => Literal::Float(f64::from(rng.gen_range(0..30)) / 4.0),
    }
}

const OPS: [CompareOp; 7] = [
    CompareOp::Eq,
    CompareOp::Ne,
    CompareOp::Lt,
    CompareOp::Le,
    CompareOp::Gt,
    CompareOp::Ge,
    CompareOp::Contains,
];

/// A valid query over [`ENTITY_POOL`]/[`RELATION_POOL`], with occasional
/// anchors that are absent from any graph.
pub fn random_ast(rng: &mut StdRng) -> CqlAst {
    let hops = rng.gen_range(1..=2);
    let anchor = |rng: &mut StdRng, p: f64| {
        rng.gen_bool(p)
            .then(|| if rng.gen_bool(0.1) { "zz".to_string() } else { ENTITY_POOL.choose(rng).unwrap().to_string() })
    };
    let mut nodes = Vec::new();
    for i in 0..=hops {
        let var = rng.gen_bool(0.85).then(|| format!("n{i}"));
        let entity = anchor(rng, if i == 0 { 0.45 } else { 0.15 });
        nodes.push(NodePattern { var, entity });
    }
    let bound: Vec<String> = nodes.iter().filter_map(|n| n.var.clone()).collect();
    let mut it = nodes.into_iter();
    let start = it.next().unwrap();
    let hops: Vec<Hop> = it
        .map(|node| Hop {
            relation: RELATION_POOL.choose(rng).unwrap().to_string(),
            direction: if rng.gen_bool(0.7) { Direction::Forward } else { Direction::Backward },
            node,
        })
        .collect();
    let pick = |rng: &mut StdRng| PropertyRef::name_of(bound.choose(rng).unwrap().clone());
    let mut conditions = Vec::new();
    let mut order_by = None;
    let returns = if bound.is_empty() || rng.gen_bool(0.2) {
        ReturnItems::CountStar
    } else {
        let n = rng.gen_range(1..=2);
        ReturnItems::Properties((0..n).map(|_| pick(rng)).collect())
    };
    if !bound.is_empty() {
        for _ in 0..rng.gen_range(0..=2) {
            conditions.push(Condition {
                left: pick(rng),
                op: *OPS.choose(rng).unwrap(),
                value: random_literal(rng),
            });
        }
        if rng.gen_bool(0.35) {
            order_by = Some(OrderBy {
                key: pick(rng),
                descending: rng.gen_bool(0.5),
            });
        }
    }
    let ast = CqlAst {
        start,
        hops,
        conditions,
        distinct: rng.gen_bool(0.5),
        returns,
        order_by,
        limit: rng.gen_bool(0.35).then(|| rng.gen_range(1..=4)),
    };
    ast.validate().expect("generator yields valid queries");
    ast
}

fn numeric(v: &str) -> Option<f64> {
    v.trim().parse::<f64>().ok().filter(|f| f.is_finite())
}

fn literal_text(l: &Literal) -> String {
    match l {
        Literal::Str(s) => s.clone(),
        Literal::Int(i) => i.to_string(),
        Literal::Float(f) => f.to_string(),
    }
}

fn reference_holds(c: &Condition, v: &str) -> bool {
    let cmp = match &c.value {
        Literal::Str(s) => Some(v.cmp(s)),
        Literal::Int(i) => numeric(v).and_then(|x| x.partial_cmp(&(*i as f64))),
        Literal::Float(f) => numeric(v).and_then(|x| x.partial_cmp(f)),
    };
    match c.op {
        CompareOp::Contains => v.contains(&literal_text(&c.value)),
        CompareOp::Eq => cmp == Some(Ordering::Equal),
        CompareOp::Ne => cmp != Some(Ordering::Equal),
        CompareOp::Lt => cmp == Some(Ordering::Less),
        CompareOp::Gt => cmp == Some(Ordering::Greater),
        CompareOp::Le => cmp.is_some_and(|o| o != Ordering::Greater),
        CompareOp::Ge => cmp.is_some_and(|o| o != Ordering::Less),
    }
}

fn reference_value_cmp(a: &str, b: &str) -> Ordering {
    match (numeric(a), numeric(b)) {
        (Some(x), Some(y)) => x.partial_cmp(&y).unwrap().then(a.cmp(b)),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => a.cmp(b),
    }
}

/// Enumerates every assignment of triples to hops and keeps the connected
/// ones; an independent re-statement of query semantics.
pub fn brute_force_execute(ast: &CqlAst, triples: &[Triple]) -> AnswerSet {
    let mut unique: Vec<&Triple> = triples.iter().collect();
    unique.sort();
    unique.dedup();
    let ends = |t: &Triple, d: Direction| match d {
        Direction::Forward => (t.head.clone(), t.tail.clone()),
        Direction::Backward => (t.tail.clone(), t.head.clone()),
    };
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut stack: Vec<Vec<String>> = vec![Vec::new()];
    while let Some(partial) = stack.pop() {
        let depth = partial.len().saturating_sub(1);
        if !partial.is_empty() && depth == ast.hops.len() {
            rows.push(partial);
            continue;
        }
        let hop = &ast.hops[depth];
        for t in &unique {
            if t.relation != hop.relation {
                continue;
            }
            let (from, to) = ends(t, hop.direction);
            let mut next = partial.clone();
            if next.is_empty() {
                next.push(from);
            } else if next[depth] != from {
                continue;
            }
            next.push(to);
            stack.push(next);
        }
    }
    let nodes: Vec<&NodePattern> = ast.nodes().collect();
    let var_index = |v: &str| nodes.iter().position(|n| n.var.as_deref() == Some(v)).unwrap();
    rows.retain(|row| {
        nodes
            .iter()
            .zip(row)
            .all(|(n, v)| n.entity.as_deref().is_none_or(|e| e == v))
    });
    rows.retain(|row| ast.conditions.iter().all(|c| reference_holds(c, &row[var_index(&c.left.var)])));

    let props = match &ast.returns {
        ReturnItems::CountStar => return AnswerSet::from([rows.len().to_string()]),
        ReturnItems::Properties(p) => p,
    };
    rows.sort_by(|a, b| {
        let key = match &ast.order_by {
            Some(o) => {
                let i = var_index(&o.key.var);
                let c = reference_value_cmp(&a[i], &b[i]);
                if o.descending {
                    c.reverse()
                } else {
                    c
                }
            }
            None => Ordering::Equal,
        };
        key.then_with(|| a.cmp(b))
    });
    let mut kept: Vec<Vec<String>> = Vec::new();
    for row in rows {
        let projected: Vec<String> = props.iter().map(|p| row[var_index(&p.var)].clone()).collect();
        if !kept.contains(&projected) {
            kept.push(projected);
        }
    }
    if let Some(n) = ast.limit {
        kept.truncate(n as usize);
    }
    kept.into_iter().flatten().collect()
}

// ---------------------------------------------------------------------------
// Reference metrics.

/// Precision, recall and F1 computed from plain vectors.
pub fn reference_prf1(pred: &[String], gold: &[String]) -> (f64, f64, f64) {
    let mut p: Vec<&String> = pred.iter().collect();
    p.sort();
    p.dedup();
    let mut g: Vec<&String> = gold.iter().collect();
    g.sort();
    g.dedup();
    if p.is_empty() && g.is_empty() {
        return (1.0, 1.0, 1.0);
    }
    if p.is_empty() || g.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let hits = p.iter().filter(|x| g.contains(x)).count() as f64;
    let precision = hits / p.len() as f64;
    let recall = hits / g.len() as f64;
    let f1 = if hits == 0.0 { 0.0 } else { 2.0 * hits / (p.len() + g.len()) as f64 };
    (precision, recall, f1)
}

pub fn random_labels(rng: &mut StdRng, universe: usize, max_len: usize) -> Vec<String> {
    let n = rng.gen_range(0..=max_len);
    (0..n).map(|_| format!("x{}", rng.gen_range(0..universe))).collect()
}

// ---------------------------------------------------------------------------
// FindRelative reference.

/// Scores every name with the documented relatedness tiers and sorts;
/// independent of the store's indices.
pub fn brute_force_find_relative(mention: &str, names: &[String], limit: usize) -> Vec<String> {
    if mention.is_empty() {
        return Vec::new();
    }
    let mut exact = Vec::new();
    let mut contained: Vec<(f64, &String)> = Vec::new();
    let mut fuzzy: Vec<(f64, &String)> = Vec::new();
    let mention_grams: BTreeSet<(char, char)> = grams(mention);
    for name in names {
        let base = base_name(name);
        if name == mention {
            exact.push(name.clone());
        } else if name.contains(mention) || (!base.is_empty() && mention.contains(base)) {
            contained.push((sim_score(mention, name), name));
        } else if mention.chars().count() < 2 || !grams(name).is_disjoint(&mention_grams) {
            let s = edit_similarity(mention, name).max(edit_similarity(mention, base));
            fuzzy.push((s, name));
        }
    }
    let by_score = |v: &mut Vec<(f64, &String)>| v.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));
    by_score(&mut contained);
    by_score(&mut fuzzy);
    exact
        .into_iter()
        .chain(contained.into_iter().map(|(_, n)| n.clone()))
        .chain(fuzzy.into_iter().map(|(_, n)| n.clone()))
        .take(limit)
        .collect()
}

fn grams(s: &str) -> BTreeSet<(char, char)> {
    let c: Vec<char> = s.chars().collect();
    c.windows(2).map(|w| (w[0], w[1])).collect()
}

// ---------------------------------------------------------------------------
// Synthetic benchmark with perturbed entity and relation names.

const FIRST: &[&str] = &[
    "Ann", "Bela", "Chen", "Dario", "Elif", "Farid", "Greta", "Hiro", "Ines", "Jonas", "Kemal", "Lucia", "Marek",
    "Nadia", "Oskar", "Priya", "Quentin", "Rosa", "Sven", "Tamar",
];
const LAST: &[&str] = &[
    "Alder", "Brook", "Castell", "Dunmore", "Esposito", "Fairley", "Garron", "Holm", "Ivers", "Jarrow", "Kowal",
    "Lindqvist", "Moreau", "Navarro", "Okafor", "Petrov",
];
const QUALIFIERS: &[&str] = &["actor", "singer", "novelist", "sprinter", "painter", "chemist", "architect"];
const RELATIONS: &[&str] = &["birthplace", "classic movie", "spouse", "award", "alma mater", "nationality"];
const DECOY_RELATIONS: &[&str] = &["sport", "instrument"];
const TAILS: &[&str] = &[
    "Lisbon", "Osaka", "Tallinn", "Quito", "Dakar", "Perth", "Golden Reel", "Silver Bear", "Iron Key", "Northgate",
    "Westfield College", "Harbor Institute", "Blue Lantern", "Night Orchard", "Paper Moon", "Red Harbor", "Canada",
    "Peru", "Kenya", "Norway", "chess", "cello", "tennis",
];

#[derive(Debug, Clone)]
pub struct SyntheticCase {
    pub question: String,
    pub gold_cql: String,
    /// What a flawed translator would emit: the gold query with perturbed
    /// entity and (sometimes) relation names.
    pub generated_cql: String,
    pub answers: AnswerSet,
    pub entity: String,
    pub relation: String,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub triples: Vec<Triple>,
    pub cases: Vec<SyntheticCase>,
}

fn one_char_edit(rng: &mut StdRng, s: &str) -> String {
    let mut chars: Vec<char> = s.chars().collect();
    let letters: Vec<usize> = chars.iter().enumerate().filter(|(_, c)| c.is_alphabetic()).map(|(i, _)| i).collect();
    let at = *letters[1..].choose(rng).unwrap();
    match rng.gen_range(0..3) {
        0 => {
            let c = chars[at];
            let mut r = c;
            while r == c {
                r = (b'a' + rng.gen_range(0..26u8)) as char;
            }
            chars[at] = r;
        }
        1 => {
            chars.remove(at);
        }
        _ => chars.insert(at, chars[at]),
    }
    chars.into_iter().collect()
}

fn query(entity: &str, relation: &str, count: bool) -> String {
    let ret = if count { "count(*)" } else { "m.name" };
    format!(
        "match(:ENTITY{{name:{}}})-[:Relationship{{name:{}}}]->(m) return {ret}",
        serde_json::to_string(entity).unwrap(),
        serde_json::to_string(relation).unwrap()
    )
}

/// Seed used by the acceptance and property tests for the shared corpus.
pub const SYNTHETIC_SEED: u64 = 20_240_611;

/// `n` questions over a generated graph of qualified person names. Each
/// question's generated query strips the entity's qualifier and often adds
/// a one-character edit; some relations are misspelled too.
pub fn synthetic_corpus(seed: u64, n: usize) -> SyntheticCorpus {
    synthetic_corpus_with_homonyms(seed, n, 0.0)
}

/// Like [`synthetic_corpus`], but with probability `homonym_rate` a person
/// gets a namesake with a different qualifier. The question never names the
/// qualifier, so such cases are ambiguous for a selector.
pub fn synthetic_corpus_with_homonyms(seed: u64, n: usize, homonym_rate: f64) -> SyntheticCorpus {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut bases: Vec<String> = FIRST.iter().flat_map(|f| LAST.iter().map(move |l| format!("{f} {l}"))).collect();
    bases.shuffle(&mut rng);
    let mut triples = Vec::new();
    let mut cases = Vec::new();
    for base in bases.into_iter().take(n) {
        let qualifier = QUALIFIERS.choose(&mut rng).unwrap();
        let entity = format!("{base} [{qualifier}]");
        let mut relations: Vec<&str> = RELATIONS.to_vec();
        relations.shuffle(&mut rng);
        relations.truncate(rng.gen_range(2..=4));
        let mut facts: Vec<(&str, Vec<&str>)> = Vec::new();
        for r in &relations {
            let mut tails: Vec<&str> = TAILS.to_vec();
            tails.shuffle(&mut rng);
            tails.truncate(rng.gen_range(1..=3));
            for t in &tails {
                triples.push(Triple::new(&entity, r, t).unwrap());
            }
            facts.push((r, tails));
        }
        if rng.gen_bool(homonym_rate) {
            let others: Vec<&&str> = QUALIFIERS.iter().filter(|q| *q != qualifier).collect();
            let other = others.choose(&mut rng).unwrap();
            let decoy = format!("{base} [{other}]");
            triples.push(Triple::new(&decoy, DECOY_RELATIONS.choose(&mut rng).unwrap(), "chess").unwrap());
        }

        let (relation, tails) = facts.choose(&mut rng).unwrap().clone();
        let count = tails.len() > 1 && rng.gen_bool(0.3);
        let question = if count {
            format!("How many {relation} entries does {base} have?")
        } else {
            format!("What is the {relation} of {base}?")
        };
        let answers: AnswerSet = if count {
            AnswerSet::from([tails.len().to_string()])
        } else {
            tails.iter().copied().collect()
        };
        let mention = if rng.gen_bool(0.6) { one_char_edit(&mut rng, &base) } else { base.clone() };
        let relation_mention = match rng.gen_range(0..10) {
            0..=1 => format!("{relation}s"),
            2..=3 => one_char_edit(&mut rng, relation),
            _ => relation.to_string(),
        };
        cases.push(SyntheticCase {
            question,
            gold_cql: query(&entity, relation, count),
            generated_cql: query(&mention, &relation_mention, count),
            answers,
            entity,
            relation: relation.to_string(),
        });
    }
    SyntheticCorpus { triples, cases }
}

impl SyntheticCorpus {
    pub fn graph(&self) -> KnowledgeGraph {
        KnowledgeGraph::from_triples(self.triples.clone())
    }

    /// Writes graph, dataset, translation table and an all-stub config
    /// into `dir`; returns the config path.
    pub fn write(&self, dir: &Path, concurrency: usize) -> PathBuf {
        let graph = std::fs::File::create(dir.join("kg.csv")).unwrap();
        write_triples(&self.triples, graph).unwrap();
        let mut dataset = String::new();
        let mut table = String::new();
        for c in &self.cases {
            let answers: Vec<&str> = c.answers.iter().collect();
            writeln!(dataset, "{}", json!({"question": c.question, "cql": c.gold_cql, "answers": answers})).unwrap();
            writeln!(table, "{}", json!({"question": c.question, "cql": c.generated_cql})).unwrap();
        }
        std::fs::write(dir.join("dataset.jsonl"), dataset).unwrap();
        std::fs::write(dir.join("translations.jsonl"), table).unwrap();
        let config = json!({
            "graph": "kg.csv",
            "dataset": "dataset.jsonl",
            "err": {"top_k": 3, "candidate_limit": 10, "selection_mode": "oracle"},
            "fusion": {"sigma": 1.0, "rule": "dda"},
            "backends": {
                "translator": {"kind": "stub", "translations": "translations.jsonl"},
                "selector": {"kind": "stub"},
                "reader": {"kind": "stub"}
            },
            "workflows": "both",
            "concurrency": concurrency
        });
        let path = dir.join("config.json");
        std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
        path
    }
}
