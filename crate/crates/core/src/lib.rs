//! Knowledge-graph question answering engine.
//!
//! Two workflows answer each question in parallel: a translator path
//! (question → generated CQL → entity/relation repair → execution) and a
//! searcher path (topic entities → one-hop triples → reader model). Their
//! answers are fused and scored with the evaluation metrics.

pub mod answer;
pub mod cql;
pub mod kg;
pub mod similarity;
pub mod metrics;
pub mod fusion;
pub mod gateway;
pub mod err;
pub mod searcher;
pub mod pipeline;

pub use answer::AnswerSet;
pub use kg::{KnowledgeGraph, Triple};
