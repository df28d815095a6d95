use super::CqlError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Str(String),
    /// Unsigned numeric text; sign is handled by the parser.
    Num(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Colon,
    Comma,
    Dot,
    Minus,
    Gt,
    Lt,
    Eq,
    Ne,
    Le,
    Ge,
    Star,
    Semicolon,
    Other(char),
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Num(s) => format!("number {s}"),
            Tok::Eof => "end of input".into(),
            Tok::Other(c) => format!("`{c}`"),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Colon => ":",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Minus => "-",
            Tok::Gt => ">",
            Tok::Lt => "<",
            Tok::Eq => "=",
            Tok::Ne => "<>",
            Tok::Le => "<=",
            Tok::Ge => ">=",
            Tok::Star => "*",
            Tok::Semicolon => ";",
            _ => "?",
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: usize,
}

const KEYWORDS: &[&str] = &[
    "match", "where", "and", "return", "distinct", "order", "by", "asc", "ascending", "desc",
    "descending", "limit", "count", "contains",
];

/// Cypher words outside the supported subset; seeing one yields an
/// "unsupported feature" error rather than a generic syntax error.
pub(crate) const UNSUPPORTED_WORDS: &[&str] = &[
    "optional", "with", "union", "create", "merge", "set", "delete", "detach", "remove", "unwind",
    "call", "skip", "or", "xor", "not", "starts", "ends", "in", "as", "exists", "is", "case",
    "foreach", "load", "yield",
];

pub(crate) fn is_reserved(word: &str) -> bool {
    KEYWORDS
        .iter()
        .chain(UNSUPPORTED_WORDS)
        .any(|k| k.eq_ignore_ascii_case(word))
}

pub(crate) fn is_identifier(word: &str) -> bool {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() || c == '_' => chars.all(|c| c.is_alphanumeric() || c == '_'),
        _ => false,
    }
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, CqlError> {
    let mut out = Vec::new();
    let mut it = text.char_indices().peekable();
    while let Some(&(pos, c)) = it.peek() {
        if c.is_whitespace() {
            it.next();
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ':' => Some(Tok::Colon),
            ',' => Some(Tok::Comma),
            '.' => Some(Tok::Dot),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '=' => Some(Tok::Eq),
            ';' => Some(Tok::Semicolon),
            _ => None,
        };
        if let Some(tok) = single {
            it.next();
            out.push(Token { tok, pos });
            continue;
        }
        match c {
            '<' | '>' => {
                it.next();
                let next = it.peek().map(|&(_, n)| n);
                let tok = match (c, next) {
                    ('<', Some('=')) => Some(Tok::Le),
                    ('<', Some('>')) => Some(Tok::Ne),
                    ('>', Some('=')) => Some(Tok::Ge),
                    _ => None,
                };
                let tok = match tok {
                    Some(t) => {
                        it.next();
                        t
                    }
                    None if c == '<' => Tok::Lt,
                    None => Tok::Gt,
                };
                out.push(Token { tok, pos });
            }
            '"' | '\'' => {
                it.next();
                let mut value = String::new();
                let mut closed = false;
                while let Some((_, ch)) = it.next() {
                    if ch == c {
                        closed = true;
                        break;
                    }
                    if ch == '\\' {
                        match it.next() {
                            Some((_, 'n')) => value.push('\n'),
                            Some((_, 't')) => value.push('\t'),
                            Some((_, e)) => value.push(e),
                            None => break,
                        }
                    } else {
                        value.push(ch);
                    }
                }
                if !closed {
                    return Err(CqlError::Syntax {
                        position: pos,
                        expected: format!("closing {c}"),
                        found: "end of input".into(),
                    });
                }
                out.push(Token {
                    tok: Tok::Str(value),
                    pos,
                });
            }
            c if c.is_ascii_digit() => {
                let mut num = String::new();
                while let Some(&(_, d)) = it.peek() {
                    if d.is_ascii_digit() {
                        num.push(d);
                        it.next();
                    } else {
                        break;
                    }
                }
                // Fraction only when a digit follows the dot, so `1.name`
                // style input still lexes as separate tokens.
                let mut look = it.clone();
                if let (Some((_, '.')), Some((_, d))) = (look.next(), look.next()) {
                    if d.is_ascii_digit() {
                        it.next();
                        num.push('.');
                        while let Some(&(_, d)) = it.peek() {
                            if d.is_ascii_digit() {
                                num.push(d);
                                it.next();
                            } else {
                                break;
                            }
                        }
                    }
                }
                let mut look = it.clone();
                if let Some((_, 'e' | 'E')) = look.next() {
                    let mut exp = String::from("e");
                    let mut peek = look.clone();
                    if let Some((_, s @ ('+' | '-'))) = peek.next() {
                        exp.push(s);
                        look = peek;
                    }
                    let mut digits = 0;
                    while let Some(&(_, d)) = look.peek() {
                        if d.is_ascii_digit() {
                            exp.push(d);
                            look.next();
                            digits += 1;
                        } else {
                            break;
                        }
                    }
                    if digits > 0 {
                        num.push_str(&exp);
                        it = look;
                    }
                }
                out.push(Token {
                    tok: Tok::Num(num),
                    pos,
                });
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut word = String::new();
                while let Some(&(_, ch)) = it.peek() {
                    if ch.is_alphanumeric() || ch == '_' {
                        word.push(ch);
                        it.next();
                    } else {
                        break;
                    }
                }
                out.push(Token {
                    tok: Tok::Ident(word),
                    pos,
                });
            }
            other => {
                it.next();
                out.push(Token {
                    tok: Tok::Other(other),
                    pos,
                });
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: text.len(),
    });
    Ok(out)
}
