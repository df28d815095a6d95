use std::fmt::Write;

use super::{CqlAst, Direction, Literal, NodePattern, ReturnItems};

/// Canonical text: lowercase keywords, single spaces, double-quoted names.
/// `parse_cql(&render_cql(a)) == a` for every valid AST.
pub fn render_cql(ast: &CqlAst) -> String {
    let mut out = String::from("match ");
    node(&mut out, &ast.start);
    for hop in &ast.hops {
        let rel = format!("[:Relationship{{name:{}}}]", quote(&hop.relation));
        match hop.direction {
            Direction::Forward => write!(out, "-{rel}->").unwrap(),
            Direction::Backward => write!(out, "<-{rel}-").unwrap(),
        }
        node(&mut out, &hop.node);
    }
    for (i, c) in ast.conditions.iter().enumerate() {
        out.push_str(if i == 0 { " where " } else { " and " });
        write!(out, "{} {} {}", c.left, c.op.symbol(), literal(&c.value)).unwrap();
    }
    out.push_str(" return ");
    if ast.distinct {
        out.push_str("distinct ");
    }
    match &ast.returns {
        ReturnItems::CountStar => out.push_str("count(*)"),
        ReturnItems::Properties(props) => {
            for (i, p) in props.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write!(out, "{p}").unwrap();
            }
        }
    }
    if let Some(order) = &ast.order_by {
        write!(out, " order by {}", order.key).unwrap();
        if order.descending {
            out.push_str(" desc");
        }
    }
    if let Some(n) = ast.limit {
        write!(out, " limit {n}").unwrap();
    }
    out
}

fn node(out: &mut String, n: &NodePattern) {
    out.push('(');
    if let Some(v) = &n.var {
        out.push_str(v);
    }
    if let Some(e) = &n.entity {
        write!(out, ":ENTITY{{name:{}}}", quote(e)).unwrap();
    }
    out.push(')');
}

pub(crate) fn quote(s: &str) -> String {
    escape(s, '"')
}

/// Wraps `s` in `q` quotes, backslash-escaping `\` and `q`.
pub(crate) fn escape(s: &str, q: char) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push(q);
    for c in s.chars() {
        if c == '\\' || c == q {
            out.push('\\');
        }
        out.push(c);
    }
    out.push(q);
    out
}

fn literal(l: &Literal) -> String {
    match l {
        Literal::Str(s) => quote(s),
        Literal::Int(i) => i.to_string(),
        Literal::Float(f) => format!("{f:?}"),
    }
}
