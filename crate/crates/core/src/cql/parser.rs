use super::lexer::{tokenize, Tok, Token, UNSUPPORTED_WORDS};
use super::{
    CompareOp, Condition, CqlAst, CqlError, Direction, Hop, Literal, NodePattern, OrderBy,
    PropertyRef, ReturnItems, MAX_HOPS,
};

/// Parses query text into a validated AST. Keywords are case-insensitive;
/// names and literals keep their case.
pub fn parse_cql(text: &str) -> Result<CqlAst, CqlError> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, at: 0 };
    let ast = p.query()?;
    ast.validate()?;
    Ok(ast)
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.at + offset).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn pos(&self) -> usize {
        self.tokens[self.at].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.at].tok.clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn syntax<T>(&self, expected: &str) -> Result<T, CqlError> {
        let found = self.peek();
        if let Tok::Ident(word) = found {
            if let Some(w) = UNSUPPORTED_WORDS.iter().find(|w| w.eq_ignore_ascii_case(word)) {
                return self.unsupported(&format!("{} clause or operator", w.to_uppercase()));
            }
        }
        Err(CqlError::Syntax {
            position: self.pos(),
            expected: expected.to_owned(),
            found: found.describe(),
        })
    }

    fn unsupported<T>(&self, feature: &str) -> Result<T, CqlError> {
        Err(CqlError::Unsupported {
            position: self.pos(),
            feature: feature.to_owned(),
        })
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(w) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), CqlError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            self.syntax(&format!("`{}`", kw.to_uppercase()))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), CqlError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            self.syntax(what)
        }
    }

    fn identifier(&mut self, what: &str) -> Result<String, CqlError> {
        match self.peek().clone() {
            Tok::Ident(w) if !super::lexer::is_reserved(&w) => {
                self.bump();
                Ok(w)
            }
            _ => self.syntax(what),
        }
    }

    fn query(&mut self) -> Result<CqlAst, CqlError> {
        self.keyword("match")?;
        let (start, hops) = self.pattern()?;
        if matches!(self.peek(), Tok::Comma) {
            return self.unsupported("multiple comma-separated patterns");
        }
        if self.at_keyword("match") {
            return self.unsupported("multiple MATCH clauses");
        }

        let mut conditions = Vec::new();
        if self.eat_keyword("where") {
            conditions.push(self.condition()?);
            while self.eat_keyword("and") {
                conditions.push(self.condition()?);
            }
        }

        self.keyword("return")?;
        let distinct = self.eat_keyword("distinct");
        let returns = self.return_items()?;

        let mut order_by = None;
        if self.eat_keyword("order") {
            self.keyword("by")?;
            let key = self.property_ref()?;
            let descending = if self.eat_keyword("desc") || self.eat_keyword("descending") {
                true
            } else {
                let _ = self.eat_keyword("asc") || self.eat_keyword("ascending");
                false
            };
            if self.eat(&Tok::Comma) {
                return self.unsupported("multiple ORDER BY keys");
            }
            order_by = Some(OrderBy { key, descending });
        }

        let mut limit = None;
        if self.eat_keyword("limit") {
            match self.peek().clone() {
                Tok::Num(n) => {
                    let value: u64 = n.parse().or_else(|_| self.syntax("positive integer"))?;
                    if value == 0 {
                        return self.syntax("positive integer");
                    }
                    self.bump();
                    limit = Some(value);
                }
                _ => return self.syntax("positive integer"),
            }
        }

        self.eat(&Tok::Semicolon);
        if !matches!(self.peek(), Tok::Eof) {
            return self.syntax("end of query");
        }
        Ok(CqlAst {
            start,
            hops,
            conditions,
            distinct,
            returns,
            order_by,
            limit,
        })
    }

    fn pattern(&mut self) -> Result<(NodePattern, Vec<Hop>), CqlError> {
        let start = self.node()?;
        let mut hops = Vec::new();
        loop {
            let direction = match (self.peek(), self.peek_at(1)) {
                (Tok::Minus, Tok::LBracket) => Direction::Forward,
                (Tok::Lt, Tok::Minus) => Direction::Backward,
                (Tok::Minus, Tok::Minus | Tok::Gt) => {
                    return self.unsupported("relationship without a :Relationship{name} pattern")
                }
                _ => break,
            };
            if hops.len() == MAX_HOPS {
                return self.unsupported("paths longer than 2 hops");
            }
            if direction == Direction::Backward {
                self.bump();
            }
            self.bump();
            if !matches!(self.peek(), Tok::LBracket) {
                return self.unsupported("relationship without a :Relationship{name} pattern");
            }
            self.bump();
            let relation = self.relationship_body()?;
            self.expect(Tok::RBracket, "`]`")?;
            self.expect(Tok::Minus, "`-`")?;
            let points_forward = self.eat(&Tok::Gt);
            match (direction, points_forward) {
                (Direction::Forward, false) => return self.unsupported("undirected relationship"),
                (Direction::Backward, true) => {
                    return self.unsupported("bidirectional relationship")
                }
                _ => {}
            }
            let node = self.node()?;
            hops.push(Hop {
                relation,
                direction,
                node,
            });
        }
        if hops.is_empty() {
            return self.unsupported("pattern without a relationship");
        }
        Ok((start, hops))
    }

    fn node(&mut self) -> Result<NodePattern, CqlError> {
        self.expect(Tok::LParen, "`(`")?;
        let var = match self.peek() {
            Tok::Ident(_) => Some(self.identifier("variable name")?),
            _ => None,
        };
        let mut entity = None;
        if self.eat(&Tok::Colon) {
            let label = self.label()?;
            if !label.eq_ignore_ascii_case("entity") {
                return self.unsupported(&format!("node label `{label}`"));
            }
            if matches!(self.peek(), Tok::Colon) {
                return self.unsupported("multiple node labels");
            }
            if matches!(self.peek(), Tok::LBrace) {
                entity = Some(self.name_map()?);
            }
        } else if matches!(self.peek(), Tok::LBrace) {
            return self.unsupported("property map without :ENTITY label");
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(NodePattern { var, entity })
    }

    fn relationship_body(&mut self) -> Result<String, CqlError> {
        if matches!(self.peek(), Tok::Ident(_)) {
            return self.unsupported("relationship variable");
        }
        if !self.eat(&Tok::Colon) {
            return self.unsupported("relationship without a :Relationship{name} pattern");
        }
        let label = self.label()?;
        if !label.eq_ignore_ascii_case("relationship") {
            return self.unsupported(&format!("relationship type `{label}`"));
        }
        if matches!(self.peek(), Tok::Other('|')) {
            return self.unsupported("relationship type alternatives");
        }
        if matches!(self.peek(), Tok::Star) {
            return self.unsupported("variable-length relationship");
        }
        if !matches!(self.peek(), Tok::LBrace) {
            return self.unsupported("relationship without a name property");
        }
        self.name_map()
    }

    fn label(&mut self) -> Result<String, CqlError> {
        match self.peek().clone() {
            Tok::Ident(w) => {
                self.bump();
                Ok(w)
            }
            _ => self.syntax("label"),
        }
    }

    /// `{name: "..."}`
    fn name_map(&mut self) -> Result<String, CqlError> {
        self.expect(Tok::LBrace, "`{`")?;
        let key = match self.peek().clone() {
            Tok::Ident(k) => k,
            _ => return self.syntax("property key"),
        };
        if !key.eq_ignore_ascii_case("name") {
            return self.unsupported(&format!("pattern property `{key}`"));
        }
        self.bump();
        self.expect(Tok::Colon, "`:`")?;
        let value = match self.peek().clone() {
            Tok::Str(s) => s,
            _ => return self.syntax("quoted name"),
        };
        if value.is_empty() {
            return self.syntax("non-empty name");
        }
        self.bump();
        if matches!(self.peek(), Tok::Comma) {
            return self.unsupported("multiple pattern properties");
        }
        self.expect(Tok::RBrace, "`}`")?;
        Ok(value)
    }

    fn property_ref(&mut self) -> Result<PropertyRef, CqlError> {
        let var = self.identifier("variable")?;
        if !matches!(self.peek(), Tok::Dot) {
            if matches!(self.peek(), Tok::LParen) {
                return self.unsupported(&format!("function `{var}`"));
            }
            return self.unsupported("bare variable (use var.name)");
        }
        self.bump();
        let property = self.identifier("property name")?;
        Ok(PropertyRef { var, property })
    }

    fn return_items(&mut self) -> Result<ReturnItems, CqlError> {
        if self.at_keyword("count") {
            self.bump();
            self.expect(Tok::LParen, "`(`")?;
            if !self.eat(&Tok::Star) {
                return self.unsupported("count(<expression>); only count(*) is supported");
            }
            self.expect(Tok::RParen, "`)`")?;
            if matches!(self.peek(), Tok::Comma) {
                return self.unsupported("count(*) combined with other projections");
            }
            self.reject_alias()?;
            return Ok(ReturnItems::CountStar);
        }
        let mut props = vec![self.property_ref()?];
        self.reject_alias()?;
        while self.eat(&Tok::Comma) {
            if self.at_keyword("count") {
                return self.unsupported("count(*) combined with other projections");
            }
            props.push(self.property_ref()?);
            self.reject_alias()?;
        }
        Ok(ReturnItems::Properties(props))
    }

    fn reject_alias(&self) -> Result<(), CqlError> {
        if self.at_keyword("as") {
            return self.unsupported("AS alias");
        }
        Ok(())
    }

    fn condition(&mut self) -> Result<Condition, CqlError> {
        if matches!(self.peek(), Tok::LParen) {
            return self.unsupported("parenthesized condition");
        }
        let left = self.property_ref()?;
        let op = match self.peek() {
            Tok::Eq => CompareOp::Eq,
            Tok::Ne => CompareOp::Ne,
            Tok::Lt => CompareOp::Lt,
            Tok::Le => CompareOp::Le,
            Tok::Gt => CompareOp::Gt,
            Tok::Ge => CompareOp::Ge,
            Tok::Ident(w) if w.eq_ignore_ascii_case("contains") => CompareOp::Contains,
            _ => return self.syntax("comparison operator"),
        };
        self.bump();
        let value = self.literal()?;
        Ok(Condition { left, op, value })
    }

    fn literal(&mut self) -> Result<Literal, CqlError> {
        let negative = self.eat(&Tok::Minus);
        match self.peek().clone() {
            Tok::Str(s) if !negative => {
                self.bump();
                Ok(Literal::Str(s))
            }
            Tok::Num(n) => {
                let lit = parse_number(&n, negative);
                match lit {
                    Some(l) => {
                        self.bump();
                        Ok(l)
                    }
                    None => self.syntax("representable number"),
                }
            }
            Tok::Ident(_) | Tok::Dot if !negative => {
                self.unsupported("comparison against a non-literal expression")
            }
            _ => self.syntax("literal"),
        }
    }
}

fn parse_number(text: &str, negative: bool) -> Option<Literal> {
    if text.contains(['.', 'e', 'E']) {
        let v: f64 = text.parse().ok()?;
        let v = if negative { -v } else { v };
        v.is_finite().then_some(Literal::Float(v))
    } else {
        let v: i128 = text.parse().ok()?;
        let v = if negative { -v } else { v };
        i64::try_from(v).ok().map(Literal::Int)
    }
}
