use std::cmp::Ordering;
use std::collections::HashSet;

use super::{CompareOp, Condition, CqlAst, CqlError, Direction, Literal, ReturnItems};
use crate::answer::AnswerSet;
use crate::kg::KnowledgeGraph;

/// Runs the query against the graph.
///
/// Bindings are enumerated hop by hop (tail to head for forward edges),
/// filtered by the `where` conditions and sorted lexicographically on the
/// bound node values; `order by` then re-sorts stably. Projected rows are
/// deduplicated before `limit`, so `distinct` never changes the answer set.
/// An anchor that is not in the graph simply yields no answers.
pub fn execute_cql(ast: &CqlAst, graph: &KnowledgeGraph) -> Result<AnswerSet, CqlError> {
    ast.validate()?;
    let resolve = |var: &str, property: &str| -> Result<usize, CqlError> {
        let idx = ast
            .node_of(var)
            .ok_or_else(|| CqlError::Execution(format!("variable `{var}` is not bound")))?;
        if property != "name" {
            return Err(CqlError::Execution(format!(
                "property `{var}.{property}` is not resolvable; nodes only carry `name`"
            )));
        }
        Ok(idx)
    };
    let filters: Vec<(usize, &Condition)> = ast
        .conditions
        .iter()
        .map(|c| resolve(&c.left.var, &c.left.property).map(|i| (i, c)))
        .collect::<Result<_, _>>()?;
    let projections: Option<Vec<usize>> = match &ast.returns {
        ReturnItems::CountStar => None,
        ReturnItems::Properties(props) => Some(
            props
                .iter()
                .map(|p| resolve(&p.var, &p.property))
                .collect::<Result<_, _>>()?,
        ),
    };
    let order = match &ast.order_by {
        Some(o) => Some((resolve(&o.key.var, &o.key.property)?, o.descending)),
        None => None,
    };

    let mut rows = bindings(ast, graph);
    rows.retain(|row| filters.iter().all(|(i, c)| condition_holds(c, row[*i])));
    rows.sort_unstable();

    let Some(projections) = projections else {
        return Ok(AnswerSet::from([rows.len().to_string()]));
    };

    if let Some((key, descending)) = order {
        rows.sort_by(|a, b| {
            let o = value_order(a[key], b[key]);
            if descending {
                o.reverse()
            } else {
                o
            }
        });
    }

    let mut seen: HashSet<Vec<&str>> = HashSet::new();
    let mut answers = AnswerSet::new();
    let limit = ast.limit.map_or(usize::MAX, |n| n as usize);
    for row in &rows {
        if seen.len() >= limit {
            break;
        }
        let projected: Vec<&str> = projections.iter().map(|i| row[*i]).collect();
        if seen.insert(projected.clone()) {
            for v in projected {
                answers.insert(v);
            }
        }
    }
    Ok(answers)
}

/// Node-value tuples, one per matching path, in pattern node order.
fn bindings<'g>(ast: &CqlAst, graph: &'g KnowledgeGraph) -> Vec<Vec<&'g str>> {
    let mut rows: Vec<Vec<&'g str>> = Vec::new();
    for (i, hop) in ast.hops.iter().enumerate() {
        let target = hop.node.entity.as_deref();
        let mut next = Vec::new();
        if i == 0 {
            let anchor = ast.start.entity.as_deref();
            let candidates: Box<dyn Iterator<Item = _>> = match (anchor, hop.direction) {
                (Some(a), Direction::Forward) => Box::new(graph.one_hop_subgraph(a).iter()),
                (Some(a), Direction::Backward) => Box::new(graph.incoming(a)),
                (None, _) => Box::new(graph.with_relation(&hop.relation)),
            };
            for t in candidates.filter(|t| t.relation == hop.relation) {
                let (from, to) = match hop.direction {
                    Direction::Forward => (t.head.as_str(), t.tail.as_str()),
                    Direction::Backward => (t.tail.as_str(), t.head.as_str()),
                };
                if anchor.is_some_and(|a| a != from) || target.is_some_and(|e| e != to) {
                    continue;
                }
                next.push(vec![from, to]);
            }
        } else {
            for row in &rows {
                let from = row[i];
                let candidates: Box<dyn Iterator<Item = _>> = match hop.direction {
                    Direction::Forward => Box::new(graph.one_hop_subgraph(from).iter()),
                    Direction::Backward => Box::new(graph.incoming(from)),
                };
                for t in candidates.filter(|t| t.relation == hop.relation) {
                    let to = match hop.direction {
                        Direction::Forward => t.tail.as_str(),
                        Direction::Backward => t.head.as_str(),
                    };
                    if target.is_some_and(|e| e != to) {
                        continue;
                    }
                    let mut extended = row.clone();
                    extended.push(to);
                    next.push(extended);
                }
            }
        }
        rows = next;
        if rows.is_empty() {
            break;
        }
    }
    rows
}

fn as_number(value: &str) -> Option<f64> {
    value.trim().parse::<f64>().ok().filter(|f| f.is_finite())
}

/// Total order used by `order by`: numeric values first (by magnitude),
/// then everything else lexicographically.
pub fn value_order(a: &str, b: &str) -> Ordering {
    match (as_number(a), as_number(b)) {
        (Some(x), Some(y)) => x.total_cmp(&y).then_with(|| a.cmp(b)),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => a.cmp(b),
    }
}

fn literal_text(l: &Literal) -> String {
    match l {
        Literal::Str(s) => s.clone(),
        Literal::Int(i) => i.to_string(),
        Literal::Float(f) => f.to_string(),
    }
}

/// String literals compare lexicographically; numeric literals compare
/// numerically and never match a value that is not a number.
fn condition_holds(c: &Condition, value: &str) -> bool {
    if c.op == CompareOp::Contains {
        return value.contains(literal_text(&c.value).as_str());
    }
    let ord = match &c.value {
        Literal::Str(s) => Some(value.cmp(s.as_str())),
        lit => as_number(value).map(|v| v.total_cmp(&lit.as_number().unwrap_or(f64::NAN))),
    };
    let eq = ord == Some(Ordering::Equal);
    match c.op {
        CompareOp::Eq => eq,
        CompareOp::Ne => !eq,
        CompareOp::Lt => ord == Some(Ordering::Less),
        CompareOp::Le => matches!(ord, Some(Ordering::Less | Ordering::Equal)),
        CompareOp::Gt => ord == Some(Ordering::Greater),
        CompareOp::Ge => matches!(ord, Some(Ordering::Greater | Ordering::Equal)),
        CompareOp::Contains => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_cql;
    use super::*;
    use crate::kg::load_triples;

    const TINY: &str = "\
Jackie Chan [Hong Kong actor],classic movie,Police Story
Jackie Chan [Hong Kong actor],classic movie,Rush Hour
Jackie Chan [Hong Kong actor],classic movie,Shinjuku Incident
Jackie Chan [Hong Kong actor],spouse,Joan Lin
Joan Lin,birthplace,Taipei
Rush Hour,release year,1998
Police Story,release year,1985
Shinjuku Incident,release year,2009
";

    fn run(q: &str) -> AnswerSet {
        let g = load_triples(TINY.as_bytes()).unwrap();
        execute_cql(&parse_cql(q).unwrap(), &g).unwrap()
    }

    #[test]
    fn corrected_and_uncorrected_anchor() {
        assert_eq!(
            run(r#"match(:ENTITY{name:"Jackie Chan [Hong Kong actor]"})-[:Relationship{name:"classic movie"}]->(m) return distinct m.name limit 3"#),
            AnswerSet::from(["Police Story", "Rush Hour", "Shinjuku Incident"])
        );
        assert!(run(r#"match(:ENTITY{name:"Jackie Chan"})-[:Relationship{name:"classic movie"}]->(m) return distinct m.name limit 3"#).is_empty());
    }

    #[test]
    fn count_star() {
        assert_eq!(
            run(r#"match(:ENTITY{name:"Jackie Chan [Hong Kong actor]"})-[:Relationship{name:"classic movie"}]->(m) return count(*)"#),
            AnswerSet::from(["3"])
        );
        assert_eq!(
            run(r#"match(:ENTITY{name:"nobody"})-[:Relationship{name:"classic movie"}]->(m) return count(*)"#),
            AnswerSet::from(["0"])
        );
    }

    #[test]
    fn two_hops_where_order_limit() {
        let q = r#"match (:ENTITY{name:"Jackie Chan [Hong Kong actor]"})-[:Relationship{name:"classic movie"}]->(m)-[:Relationship{name:"release year"}]->(y)
                   where y.name > 1990 return m.name order by y.name desc limit 1"#;
        assert_eq!(run(q), AnswerSet::from(["Shinjuku Incident"]));
        let q = r#"match (:ENTITY{name:"Jackie Chan [Hong Kong actor]"})-[:Relationship{name:"classic movie"}]->(m) return m.name limit 2"#;
        assert_eq!(run(q), AnswerSet::from(["Police Story", "Rush Hour"]));
    }

    #[test]
    fn backward_hop_and_unanchored_start() {
        let q = r#"match (:ENTITY{name:"Joan Lin"})<-[:Relationship{name:"spouse"}]-(p) return p.name"#;
        assert_eq!(run(q), AnswerSet::from(["Jackie Chan [Hong Kong actor]"]));
        let q = r#"match (m)-[:Relationship{name:"release year"}]->(y) where y.name contains "19" return m.name"#;
        assert_eq!(run(q), AnswerSet::from(["Police Story", "Rush Hour"]));
    }

    #[test]
    fn unknown_property_is_an_execution_error() {
        let g = load_triples(TINY.as_bytes()).unwrap();
        let ast = parse_cql(r#"match (:ENTITY{name:"Joan Lin"})-[:Relationship{name:"birthplace"}]->(m) return m.age"#).unwrap();
        assert!(matches!(execute_cql(&ast, &g), Err(CqlError::Execution(_))));
    }

    #[test]
    fn value_order_numbers_first() {
        let mut v = vec!["b", "10", "a", "9", "2.5"];
        v.sort_by(|a, b| value_order(a, b));
        assert_eq!(v, vec!["2.5", "9", "10", "a", "b"]);
    }
}
