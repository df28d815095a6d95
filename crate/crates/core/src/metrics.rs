//! Answer-set precision/recall/F1, logical and execution accuracy, and
//! corpus aggregation (macro-averaged over questions).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answer::AnswerSet;
use crate::cql::{self, parse_cql, render_cql};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("cannot compute {0} over an empty input")]
    Empty(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Per-question precision, recall and F1 of `pred` against `gold`.
///
/// Both empty scores (1, 1, 1); exactly one empty scores (0, 0, 0).
pub fn prf1(pred: &AnswerSet, gold: &AnswerSet) -> Scores {
    match (pred.is_empty(), gold.is_empty()) {
        (true, true) => {
            return Scores {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0,
            }
        }
        (true, false) | (false, true) => {
            return Scores {
                precision: 0.0,
                recall: 0.0,
                f1: 0.0,
            }
        }
        _ => {}
    }
    let hit = pred.overlap(gold) as f64;
    let precision = hit / pred.len() as f64;
    let recall = hit / gold.len() as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Scores {
        precision,
        recall,
        f1,
    }
}

pub fn f1(pred: &AnswerSet, gold: &AnswerSet) -> f64 {
    prf1(pred, gold).f1
}

/// Canonical form used for logical-form comparison: the rendered AST when
/// the text parses, otherwise a lexical cleanup (keywords lowercased,
/// whitespace collapsed, quotes unified). Condition order is kept as
/// written, so reordered `where` clauses do not match.
pub fn normalize_cql(text: &str) -> String {
    match parse_cql(text) {
        Ok(ast) => render_cql(&ast),
        Err(_) => lexical_normalize(text),
    }
}

fn is_quote(c: char) -> bool {
    matches!(c, '"' | '\'' | '\u{201c}' | '\u{201d}' | '\u{2018}' | '\u{2019}')
}

fn closing_quote(open: char) -> char {
    match open {
        '\u{201c}' => '\u{201d}',
        '\u{2018}' => '\u{2019}',
        c => c,
    }
}

fn lexical_normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut String| {
        if !word.is_empty() {
            if cql::is_keyword(word) {
                out.push_str(&word.to_lowercase());
            } else {
                out.push_str(word);
            }
            word.clear();
        }
    };
    let mut chars = text.trim().chars().peekable();
    let mut pending_space = false;
    while let Some(c) = chars.next() {
        if c.is_alphanumeric() || c == '_' {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            word.push(c);
            continue;
        }
        flush(&mut word, &mut out);
        if c.is_whitespace() {
            pending_space = true;
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        if is_quote(c) {
            let close = closing_quote(c);
            out.push('"');
            while let Some(s) = chars.next() {
                if s == close || (close == '"' && s == '\u{201d}') {
                    break;
                }
                if s == '\\' {
                    if let Some(e) = chars.next() {
                        if e == '"' || e == '\\' {
                            out.push('\\');
                        }
                        out.push(e);
                    }
                    continue;
                }
                if s == '"' {
                    out.push('\\');
                }
                out.push(s);
            }
            out.push('"');
            continue;
        }
        out.push(c);
    }
    flush(&mut word, &mut out);
    out
}

/// Fraction of `(pred, gold)` pairs whose normalized texts are equal.
pub fn logical_accuracy<P: AsRef<str>, G: AsRef<str>>(pairs: &[(P, G)]) -> Result<f64, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::Empty("logical accuracy"));
    }
    let hits = pairs
        .iter()
        .filter(|(p, g)| normalize_cql(p.as_ref()) == normalize_cql(g.as_ref()))
        .count();
    Ok(hits as f64 / pairs.len() as f64)
}

/// Fraction of records whose predicted answers equal the gold answers.
pub fn execution_accuracy(records: &[EvaluationRecord]) -> Result<f64, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty("execution accuracy"));
    }
    let hits = records.iter().filter(|r| r.pred_answers == r.gold_answers).count();
    Ok(hits as f64 / records.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Simple,
    Complex,
}

impl Difficulty {
    /// Complex when the query counts, filters, orders, or involves more than
    /// one entity or relation.
    pub fn classify(gold_cql: &str) -> Self {
        let complex = match parse_cql(gold_cql) {
            Ok(ast) => {
                ast.returns == cql::ReturnItems::CountStar
                    || !ast.conditions.is_empty()
                    || ast.order_by.is_some()
                    || ast.hops.len() >= 2
                    || ast.entity_anchors().len() >= 2
            }
            Err(_) => {
                let lower = gold_cql.to_lowercase();
                let words: Vec<&str> = lower.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()).collect();
                let squeezed: String = lower.split_whitespace().collect();
                squeezed.contains("count(*)")
                    || words.contains(&"where")
                    || words.windows(2).any(|w| w == ["order", "by"])
                    || cql::extract_entities(gold_cql).len() >= 2
                    || cql::extract_relations(gold_cql).len() >= 2
            }
        };
        if complex {
            Difficulty::Complex
        } else {
            Difficulty::Simple
        }
    }
}

/// Which workflow the final answer came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnswerSource {
    Translator,
    Searcher,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub question: String,
    pub gold_cql: Option<String>,
    pub pred_cql: Option<String>,
    pub gold_answers: AnswerSet,
    pub pred_answers: AnswerSet,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub logical_match: bool,
    pub execution_match: bool,
    pub difficulty: Option<Difficulty>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<AnswerSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translator_answers: Option<AnswerSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub searcher_answers: Option<AnswerSet>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

impl EvaluationRecord {
    pub fn new(
        question: impl Into<String>,
        gold_cql: Option<String>,
        pred_cql: Option<String>,
        gold_answers: AnswerSet,
        pred_answers: AnswerSet,
    ) -> Self {
        let scores = prf1(&pred_answers, &gold_answers);
        let logical_match = match (&pred_cql, &gold_cql) {
            (Some(p), Some(g)) => normalize_cql(p) == normalize_cql(g),
            _ => false,
        };
        let execution_match = pred_answers == gold_answers;
        let difficulty = gold_cql.as_deref().map(Difficulty::classify);
        Self {
            question: question.into(),
            gold_cql,
            pred_cql,
            gold_answers,
            pred_answers,
            precision: scores.precision,
            recall: scores.recall,
            f1: scores.f1,
            logical_match,
            execution_match,
            difficulty,
            source: None,
            translator_answers: None,
            searcher_answers: None,
            warnings: Vec::new(),
            errors: Vec::new(),
        }
    }
}

/// The five corpus-level ratios over a set of records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub acc_lx: f64,
    pub acc_ex: f64,
    pub macro_p: f64,
    pub macro_r: f64,
    pub macro_f1: f64,
}

impl Summary {
    pub fn of(records: &[EvaluationRecord]) -> Result<Self, MetricsError> {
        if records.is_empty() {
            return Err(MetricsError::Empty("aggregate"));
        }
        let mean = |f: &dyn Fn(&EvaluationRecord) -> f64| {
            // Sorted summation keeps the result independent of record order.
            let mut values: Vec<f64> = records.iter().map(f).collect();
            values.sort_by(f64::total_cmp);
            values.iter().sum::<f64>() / records.len() as f64
        };
        Ok(Self {
            count: records.len(),
            acc_lx: mean(&|r| f64::from(u8::from(r.logical_match))),
            acc_ex: mean(&|r| f64::from(u8::from(r.execution_match))),
            macro_p: mean(&|r| r.precision),
            macro_r: mean(&|r| r.recall),
            macro_f1: mean(&|r| r.f1),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    #[serde(flatten)]
    pub summary: Summary,
    #[serde(default)]
    pub by_difficulty: BTreeMap<Difficulty, Summary>,
    #[serde(default)]
    pub config: serde_json::Value,
    pub records: Vec<EvaluationRecord>,
}

/// Macro-averages over `records`, with a breakdown by difficulty for
/// records that carry a gold query.
pub fn aggregate(records: Vec<EvaluationRecord>) -> Result<Report, MetricsError> {
    let summary = Summary::of(&records)?;
    let mut groups: BTreeMap<Difficulty, Vec<EvaluationRecord>> = BTreeMap::new();
    for r in &records {
        if let Some(d) = r.difficulty {
            groups.entry(d).or_default().push(r.clone());
        }
    }
    let by_difficulty = groups
        .into_iter()
        .map(|(d, rs)| Summary::of(&rs).map(|s| (d, s)))
        .collect::<Result<_, _>>()?;
    Ok(Report {
        summary,
        by_difficulty,
        config: serde_json::Value::Null,
        records,
    })
}
