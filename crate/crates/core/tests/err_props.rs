mod common;

use common::*;
use kgqa::cql::{execute_cql, parse_cql, render_cql};
use kgqa::err::{correct_cql, rank_relations, ErrConfig, ErrError, EntitySelector, SelectionMode, SimilaritySelector};
use kgqa::gateway::{Gateway, GatewayError};
use kgqa::metrics::f1;
use kgqa::similarity::{sim_score, BigramDice};
use kgqa::{AnswerSet, KnowledgeGraph, Triple};
use proptest::prelude::*;

fn oracle() -> ErrConfig {
    ErrConfig::default()
}

fn heuristic() -> ErrConfig {
    ErrConfig {
        selection_mode: SelectionMode::Heuristic,
        ..ErrConfig::default()
    }
}

#[test]
fn repairs_the_worked_query() {
    let g = tiny_graph();
    let gold = three_movies();
    let out = correct_cql(JACKIE_QUESTION, JACKIE_GENERATED, &g, &oracle(), &Gateway::stub(), &BigramDice, Some(&gold))
        .unwrap();
    assert_eq!(out.best_answers, gold);
    assert_eq!(
        out.chosen_entities,
        [("Jackie Chan".to_string(), "Jackie Chan [Hong Kong actor]".to_string())]
    );
    assert_eq!(out.chosen_relations.first().map(String::as_str), Some("classic movie"));
    assert!(out.candidates.contains(&out.best));
    assert_eq!(out.mode_used, SelectionMode::Oracle);
    assert!(parse_cql(&out.best).unwrap().entity_anchors() == ["Jackie Chan [Hong Kong actor]"]);
}

#[test]
fn relation_ranking_matches_exhaustive_scoring() {
    let g = KnowledgeGraph::from_triples(
        ["classic movie", "capital", "occupation"]
            .into_iter()
            .map(|r| Triple::new("x", r, "y").unwrap()),
    );
    let cfg = ErrConfig {
        top_k: 2,
        ..ErrConfig::default()
    };
    let mention = "classical movies";
    let mut all: Vec<(f64, &str)> = g.relation_names().iter().map(|r| (sim_score(mention, r), r.as_str())).collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));
    let expected: Vec<&str> = all.iter().take(2).map(|(_, r)| *r).collect();
    assert_eq!(rank_relations(mention, &g, &cfg, &BigramDice), expected);
    assert_eq!(expected[0], "classic movie");
}

#[test]
fn contract_errors() {
    let g = tiny_graph();
    let gold = three_movies();
    let run = |cql: &str, cfg: &ErrConfig, gold: Option<&AnswerSet>| {
        correct_cql(JACKIE_QUESTION, cql, &g, cfg, &SimilaritySelector, &BigramDice, gold)
    };
    assert!(matches!(run("  ", &oracle(), Some(&gold)), Err(ErrError::EmptyQuery)));
    assert!(matches!(run(JACKIE_GENERATED, &oracle(), None), Err(ErrError::MissingGold)));
    let bad = ErrConfig {
        top_k: 5,
        candidate_limit: 2,
        ..ErrConfig::default()
    };
    assert!(matches!(run(JACKIE_GENERATED, &bad, Some(&gold)), Err(ErrError::InvalidConfig(_))));
    let zero = ErrConfig { top_k: 0, ..ErrConfig::default() };
    assert!(matches!(run(JACKIE_GENERATED, &zero, Some(&gold)), Err(ErrError::InvalidConfig(_))));
}

struct FailingSelector;

impl EntitySelector for FailingSelector {
    fn select(&self, _: &str, _: &str, _: &[String]) -> Result<String, GatewayError> {
        Err(GatewayError::Timeout {
            backend: "test".into(),
            attempts: 4,
        })
    }
}

#[test]
fn selector_failure_is_not_an_empty_answer() {
    let g = tiny_graph();
    let err = correct_cql(JACKIE_QUESTION, JACKIE_GENERATED, &g, &heuristic(), &FailingSelector, &BigramDice, None)
        .unwrap_err();
    assert!(matches!(err, ErrError::Selector(GatewayError::Timeout { .. })));
}

#[test]
fn unknown_entity_is_kept_with_a_warning() {
    let g = tiny_graph();
    let cql = r#"match(:ENTITY{name:"Zzyzx"})-[:Relationship{name:"capital"}]->(m) return m.name"#;
    let out = correct_cql("?", cql, &g, &heuristic(), &SimilaritySelector, &BigramDice, None).unwrap();
    assert!(out.chosen_entities.is_empty());
    assert!(!out.warnings.is_empty());
    assert!(out.best_answers.is_empty());
    assert_eq!(parse_cql(&out.best).unwrap().entity_anchors(), ["Zzyzx"]);
}

#[test]
fn unparseable_input_falls_back_to_aligned_text() {
    let g = tiny_graph();
    let cql = r#"match(:ENTITY{name:"China"})-[:Relationship{name:"capitol"}]->(m) return m.name garbage"#;
    let out = correct_cql("?", cql, &g, &heuristic(), &SimilaritySelector, &BigramDice, None).unwrap();
    assert!(out.candidates.is_empty());
    assert!(out.best_answers.is_empty());
    assert!(out.warnings.iter().any(|w| w.contains("does not parse")));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn correction_invariants_on_perturbed_corpora(seed in any::<u64>()) {
        let corpus = synthetic_corpus_with_homonyms(seed, 12, 0.2);
        let graph = corpus.graph();
        let selector = Gateway::stub();
        for case in &corpus.cases {
            let gold = &case.answers;
            let run = |cql: &str, cfg: &ErrConfig| {
                correct_cql(&case.question, cql, &graph, cfg, &selector, &BigramDice, Some(gold)).unwrap()
            };
            let best = run(&case.generated_cql, &oracle());
            let cheap = run(&case.generated_cql, &heuristic());

            let ast = parse_cql(&best.best).unwrap();
            for anchor in ast.entity_anchors() {
                prop_assert!(graph.has_entity(anchor), "anchor {anchor:?} not aligned");
            }
            prop_assert!(!best.candidates.is_empty() && best.candidates.len() <= oracle().top_k);
            prop_assert!(best.candidates.contains(&best.best));
            for c in &best.candidates {
                prop_assert!(parse_cql(c).is_ok());
            }
            prop_assert_eq!(&execute_cql(&ast, &graph).unwrap(), &best.best_answers);
            prop_assert!(f1(&best.best_answers, gold) >= f1(&cheap.best_answers, gold));

            let again = run(&best.best, &oracle());
            prop_assert_eq!(render_cql(&parse_cql(&again.best).unwrap()), render_cql(&ast));
        }
    }
}
