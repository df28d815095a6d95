//! Entity and relation replacement for generated queries.
//!
//! A translated query often names an entity or relation slightly
//! differently from the graph ("Jackie Chan" vs "Jackie Chan [Hong Kong
//! actor]"). [`correct_cql`] swaps every entity for a graph entity picked by
//! a selector, then builds one candidate per top-k replacement of the first
//! relation and picks the best candidate by execution.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answer::AnswerSet;
use crate::cql::{self, execute_cql, parse_cql, render_cql, MentionKind};
use crate::gateway::{most_similar, Gateway, GatewayError, ModelRequest};
use crate::kg::KnowledgeGraph;
use crate::metrics::f1;
use crate::similarity::SimilarityScorer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    /// Highest answer F1 against gold; reproduces benchmark evaluation.
    Oracle,
    /// First candidate with a non-empty execution; needs no gold.
    Heuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ErrConfig {
    pub top_k: usize,
    pub candidate_limit: usize,
    pub selection_mode: SelectionMode,
}

impl Default for ErrConfig {
    fn default() -> Self {
        Self {
            top_k: 3,
            candidate_limit: 10,
            selection_mode: SelectionMode::Oracle,
        }
    }
}

impl ErrConfig {
    pub fn validate(&self) -> Result<(), ErrError> {
        if self.top_k == 0 {
            return Err(ErrError::InvalidConfig("top_k must be at least 1".into()));
        }
        if self.candidate_limit < self.top_k {
            return Err(ErrError::InvalidConfig(format!(
                "candidate_limit {} is below top_k {}",
                self.candidate_limit, self.top_k
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ErrError {
    #[error("invalid correction config: {0}")]
    InvalidConfig(String),
    #[error("oracle selection needs gold answers")]
    MissingGold,
    #[error("empty query")]
    EmptyQuery,
    #[error("no candidates to select from for mention {0:?}")]
    NoCandidates(String),
    #[error("entity selector failed: {0}")]
    Selector(#[from] GatewayError),
}

/// Picks the graph entity a question means by `mention`.
pub trait EntitySelector: Sync {
    /// Returns the chosen name. Implementations may return text outside
    /// `candidates`; [`select_entity`] validates the pick.
    fn select(&self, question: &str, mention: &str, candidates: &[String]) -> Result<String, GatewayError>;
}

/// Deterministic selector: highest bigram similarity to the mention.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimilaritySelector;

impl EntitySelector for SimilaritySelector {
    fn select(&self, _question: &str, mention: &str, candidates: &[String]) -> Result<String, GatewayError> {
        Ok(most_similar(mention, candidates).unwrap_or_default().to_owned())
    }
}

impl EntitySelector for Gateway {
    fn select(&self, question: &str, mention: &str, candidates: &[String]) -> Result<String, GatewayError> {
        let response = self.generate(&ModelRequest::select(question, mention, candidates))?;
        Ok(response.text.trim().to_owned())
    }
}

/// One element of `candidates`. A pick outside the list is replaced by the
/// similarity rule.
pub fn select_entity(
    question: &str,
    mention: &str,
    candidates: &[String],
    selector: &dyn EntitySelector,
) -> Result<String, ErrError> {
    if candidates.is_empty() {
        return Err(ErrError::NoCandidates(mention.to_owned()));
    }
    let pick = selector.select(question, mention, candidates)?;
    if candidates.contains(&pick) {
        return Ok(pick);
    }
    if let Some(listed) = candidates.iter().find(|c| c.trim() == pick.trim_matches(['"', '\'', '.', ' '])) {
        return Ok(listed.clone());
    }
    log::debug!("selector returned {pick:?}, not a candidate for {mention:?}; using similarity");
    Ok(most_similar(mention, candidates).unwrap_or(&candidates[0]).to_owned())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionResult {
    pub best: String,
    /// Execution result of `best` (empty if it failed to run).
    pub best_answers: AnswerSet,
    pub candidates: Vec<String>,
    /// `(mention, chosen graph entity)` per entity position.
    pub chosen_entities: Vec<(String, String)>,
    pub chosen_relations: Vec<String>,
    pub mode_used: SelectionMode,
    pub warnings: Vec<String>,
}

/// Replacement relations for `relation`: FindRelative candidates ranked by
/// `scorer` (descending, ties lexicographic), truncated to `top_k`.
pub fn rank_relations(
    relation: &str,
    graph: &KnowledgeGraph,
    config: &ErrConfig,
    scorer: &dyn SimilarityScorer,
) -> Vec<String> {
    let mut scored: Vec<(f64, String)> = graph
        .find_relative_relations(relation, config.candidate_limit)
        .into_iter()
        .map(|r| (scorer.score(relation, &r), r))
        .collect();
    scored.sort_by(|(sa, a), (sb, b)| sb.total_cmp(sa).then_with(|| a.cmp(b)));
    scored.into_iter().take(config.top_k).map(|(_, r)| r).collect()
}

/// Repairs `cql_p` against `graph`.
///
/// Selector failures propagate; a candidate that fails to parse or execute
/// is recorded as a warning rather than aborting the correction.
#[allow(clippy::too_many_arguments)]
pub fn correct_cql(
    question: &str,
    cql_p: &str,
    graph: &KnowledgeGraph,
    config: &ErrConfig,
    selector: &dyn EntitySelector,
    scorer: &dyn SimilarityScorer,
    gold: Option<&AnswerSet>,
) -> Result<CorrectionResult, ErrError> {
    config.validate()?;
    if cql_p.trim().is_empty() {
        return Err(ErrError::EmptyQuery);
    }
    if config.selection_mode == SelectionMode::Oracle && gold.is_none() {
        return Err(ErrError::MissingGold);
    }
    let mut warnings = Vec::new();

    let mut aligned = cql_p.to_owned();
    let mut chosen_entities = Vec::new();
    for (j, mention) in cql::extract_entities(cql_p).into_iter().enumerate() {
        let found = graph.find_relative_entities(&mention, config.candidate_limit);
        if found.is_empty() {
            warnings.push(format!("no graph entity resembles {mention:?}; kept as written"));
            continue;
        }
        let pick = select_entity(question, &mention, &found, selector)?;
        match cql::substitute_at(&aligned, MentionKind::Entity, j, &pick) {
            Ok(text) => {
                aligned = text;
                chosen_entities.push((mention, pick));
            }
            Err(e) => warnings.push(format!("could not substitute {pick:?}: {e}")),
        }
    }

    let relations = cql::extract_relations(&aligned);
    let chosen_relations = match relations.first() {
        Some(r) => rank_relations(r, graph, config, scorer),
        None => Vec::new(),
    };
    let raw_candidates: Vec<String> = if chosen_relations.is_empty() {
        vec![aligned.clone()]
    } else {
        chosen_relations
            .iter()
            .filter_map(|r| match cql::substitute_at(&aligned, MentionKind::Relation, 0, r) {
                Ok(text) => Some(text),
                Err(e) => {
                    warnings.push(format!("could not substitute relation {r:?}: {e}"));
                    None
                }
            })
            .collect()
    };

    let mut candidates = Vec::new();
    let mut answers = Vec::new();
    for text in raw_candidates {
        match parse_cql(&text) {
            Ok(ast) => {
                let result = execute_cql(&ast, graph).unwrap_or_else(|e| {
                    warnings.push(format!("candidate failed to execute: {e}"));
                    AnswerSet::new()
                });
                let canonical = render_cql(&ast);
                if !candidates.contains(&canonical) {
                    candidates.push(canonical);
                    answers.push(result);
                }
            }
            Err(e) => warnings.push(format!("dropped candidate that does not parse: {e}")),
        }
    }

    let chosen = match config.selection_mode {
        SelectionMode::Oracle => {
            let gold = gold.expect("checked above");
            let mut best: Option<(usize, f64)> = None;
            for (idx, a) in answers.iter().enumerate() {
                let score = f1(a, gold);
                if best.is_none_or(|(_, s)| score > s) {
                    best = Some((idx, score));
                }
            }
            best.map(|(idx, _)| idx)
        }
        SelectionMode::Heuristic => answers
            .iter()
            .position(|a| !a.is_empty())
            .or((!answers.is_empty()).then_some(0)),
    };
    let (best, best_answers) = match chosen {
        Some(idx) => (candidates[idx].clone(), answers[idx].clone()),
        None => (aligned, AnswerSet::new()),
    };
    Ok(CorrectionResult {
        best,
        best_answers,
        candidates,
        chosen_entities,
        chosen_relations,
        mode_used: config.selection_mode,
        warnings,
    })
}
