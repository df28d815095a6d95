//! The Cypher subset used by generated queries: one linear `match` path of
//! one or two hops over `:ENTITY` nodes and `:Relationship` edges, an
//! optional AND-joined `where`, `return [distinct]` of `var.name`
//! projections or `count(*)`, optional `order by` and `limit`.
//!
//! Anything outside that subset is rejected with [`CqlError::Unsupported`]
//! naming the construct, so coverage gaps stay visible.

mod exec;
mod lexer;
mod mentions;
mod parser;
mod render;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use exec::{execute_cql, value_order};
pub use mentions::{
    extract_entities, extract_relations, mentions, substitute, substitute_at, Mention, MentionKind,
};
pub use parser::parse_cql;
pub use render::render_cql;

/// Whether `word` is a Cypher keyword (supported or not), case-insensitively.
pub fn is_keyword(word: &str) -> bool {
    lexer::is_reserved(word)
}

/// Longest supported match path.
pub const MAX_HOPS: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CqlError {
    #[error("syntax error at byte {position}: expected {expected}, found {found}")]
    Syntax {
        position: usize,
        expected: String,
        found: String,
    },
    #[error("unsupported feature at byte {position}: {feature}")]
    Unsupported { position: usize, feature: String },
    #[error("invalid query: {0}")]
    Invalid(String),
    #[error("no {kind} mention {mention:?} at occurrence {index}")]
    Substitution {
        kind: MentionKind,
        mention: String,
        index: usize,
    },
    #[error("execution error: {0}")]
    Execution(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodePattern {
    pub var: Option<String>,
    /// Entity anchor from `{name:"..."}`.
    pub entity: Option<String>,
}

impl NodePattern {
    pub fn var(name: impl Into<String>) -> Self {
        Self {
            var: Some(name.into()),
            entity: None,
        }
    }

    pub fn anchor(name: impl Into<String>) -> Self {
        Self {
            var: None,
            entity: Some(name.into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// `-[...]->`: the previous node is the head.
    Forward,
    /// `<-[...]-`: the previous node is the tail.
    Backward,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hop {
    pub relation: String,
    pub direction: Direction,
    pub node: NodePattern,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyRef {
    pub var: String,
    pub property: String,
}

impl PropertyRef {
    pub fn name_of(var: impl Into<String>) -> Self {
        Self {
            var: var.into(),
            property: "name".into(),
        }
    }
}

impl fmt::Display for PropertyRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.var, self.property)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Contains,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Ne => "<>",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
            CompareOp::Contains => "contains",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Literal {
    Str(String),
    Int(i64),
    Float(f64),
}

impl Literal {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Literal::Str(_) => None,
            Literal::Int(i) => Some(*i as f64),
            Literal::Float(f) => Some(*f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub left: PropertyRef,
    pub op: CompareOp,
    pub value: Literal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReturnItems {
    CountStar,
    Properties(Vec<PropertyRef>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderBy {
    pub key: PropertyRef,
    pub descending: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CqlAst {
    pub start: NodePattern,
    pub hops: Vec<Hop>,
    pub conditions: Vec<Condition>,
    pub distinct: bool,
    pub returns: ReturnItems,
    pub order_by: Option<OrderBy>,
    pub limit: Option<u64>,
}

impl CqlAst {
    /// A single-path query returning `returns`; validated.
    pub fn new(start: NodePattern, hops: Vec<Hop>, returns: ReturnItems) -> Result<Self, CqlError> {
        let ast = Self {
            start,
            hops,
            conditions: Vec::new(),
            distinct: false,
            returns,
            order_by: None,
            limit: None,
        };
        ast.validate()?;
        Ok(ast)
    }

    /// Nodes of the path in pattern order.
    pub fn nodes(&self) -> impl Iterator<Item = &NodePattern> {
        std::iter::once(&self.start).chain(self.hops.iter().map(|h| &h.node))
    }

    /// Position of `var` in [`CqlAst::nodes`].
    pub fn node_of(&self, var: &str) -> Option<usize> {
        self.nodes().position(|n| n.var.as_deref() == Some(var))
    }

    pub fn entity_anchors(&self) -> Vec<&str> {
        self.nodes().filter_map(|n| n.entity.as_deref()).collect()
    }

    pub fn relations(&self) -> Vec<&str> {
        self.hops.iter().map(|h| h.relation.as_str()).collect()
    }

    /// Checks the structural invariants the parser guarantees.
    pub fn validate(&self) -> Result<(), CqlError> {
        let invalid = |msg: String| Err(CqlError::Invalid(msg));
        if self.hops.is_empty() {
            return invalid("pattern has no relationship".into());
        }
        if self.hops.len() > MAX_HOPS {
            return invalid(format!("pattern has {} hops, at most {MAX_HOPS} supported", self.hops.len()));
        }
        let mut seen: Vec<&str> = Vec::new();
        for node in self.nodes() {
            if let Some(v) = node.var.as_deref() {
                if !lexer::is_identifier(v) || lexer::is_reserved(v) {
                    return invalid(format!("bad variable name {v:?}"));
                }
                if seen.contains(&v) {
                    return invalid(format!("variable `{v}` bound twice"));
                }
                seen.push(v);
            }
            if node.entity.as_deref() == Some("") {
                return invalid("empty entity name".into());
            }
        }
        if self.hops.iter().any(|h| h.relation.is_empty()) {
            return invalid("empty relation name".into());
        }
        let check = |p: &PropertyRef| -> Result<(), CqlError> {
            if !seen.contains(&p.var.as_str()) {
                return Err(CqlError::Invalid(format!("unbound variable `{}`", p.var)));
            }
            if !lexer::is_identifier(&p.property) || lexer::is_reserved(&p.property) {
                return Err(CqlError::Invalid(format!("bad property name {:?}", p.property)));
            }
            Ok(())
        };
        for c in &self.conditions {
            check(&c.left)?;
            if let Literal::Float(f) = c.value {
                if !f.is_finite() {
                    return invalid("non-finite numeric literal".into());
                }
            }
        }
        match &self.returns {
            ReturnItems::CountStar => {}
            ReturnItems::Properties(props) => {
                if props.is_empty() {
                    return invalid("empty return clause".into());
                }
                for p in props {
                    check(p)?;
                }
            }
        }
        if let Some(o) = &self.order_by {
            check(&o.key)?;
        }
        if self.limit == Some(0) {
            return invalid("limit must be positive".into());
        }
        Ok(())
    }
}

impl fmt::Display for CqlAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_cql(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_rejects_empty_pattern() {
        let err = CqlAst::new(
            NodePattern::anchor("A"),
            vec![],
            ReturnItems::CountStar,
        )
        .unwrap_err();
        assert!(matches!(err, CqlError::Invalid(_)));
    }

    #[test]
    fn construction_rejects_unbound_projection() {
        let hop = Hop {
            relation: "r".into(),
            direction: Direction::Forward,
            node: NodePattern::var("m"),
        };
        let err = CqlAst::new(
            NodePattern::anchor("A"),
            vec![hop],
            ReturnItems::Properties(vec![PropertyRef::name_of("x")]),
        )
        .unwrap_err();
        assert_eq!(err, CqlError::Invalid("unbound variable `x`".into()));
    }
}
