//! Negation-free expressions over named atoms.
//!
//! Grammar:
//!
//! ```text
//! expr   := term ('|' term)*
//! term   := factor ('&' factor)*
//! factor := atom | 'bot' | 'top' | '(' expr ')'
//! atom   := [A-Za-z_][A-Za-z0-9_]*   (excluding `bot`, `top`)
//! ```

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("empty expression")]
    Empty,
}

fn syntax(column: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        column,
        message: message.into(),
    }
}

/// Expression tree. Atoms are kept by name and resolved against an algebra
/// when evaluated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expression {
    Atom(String),
    Bot,
    Top,
    Meet(Box<Expression>, Box<Expression>),
    Join(Box<Expression>, Box<Expression>),
}

impl Expression {
    pub fn parse(text: &str) -> Result<Expression, ParseError> {
        let tokens = tokenize(text)?;
        if tokens.is_empty() {
            return Err(ParseError::Empty);
        }
        let mut parser = Parser {
            tokens: &tokens,
            pos: 0,
            end_column: text.chars().count() + 1,
        };
        let expr = parser.expr()?;
        if let Some(tok) = parser.peek() {
            return Err(syntax(tok.column, format!("unexpected {}", tok.kind)));
        }
        Ok(expr)
    }

    pub fn meet(self, other: Expression) -> Expression {
        Expression::Meet(Box::new(self), Box::new(other))
    }

    pub fn join(self, other: Expression) -> Expression {
        Expression::Join(Box::new(self), Box::new(other))
    }

    /// Names of all atoms referenced, in order of first appearance.
    pub fn atoms(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expression::Atom(name) => {
                if !out.contains(&name.as_str()) {
                    out.push(name);
                }
            }
            Expression::Bot | Expression::Top => {}
            Expression::Meet(l, r) | Expression::Join(l, r) => {
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expression::Atom(name) => f.write_str(name),
            Expression::Bot => f.write_str("bot"),
            Expression::Top => f.write_str("top"),
            Expression::Meet(l, r) => {
                write_operand(f, l, true)?;
                f.write_str("&")?;
                write_operand(f, r, true)
            }
            Expression::Join(l, r) => {
                write_operand(f, l, false)?;
                f.write_str("|")?;
                write_operand(f, r, false)
            }
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expression, in_meet: bool) -> fmt::Result {
    if in_meet && matches!(e, Expression::Join(..)) {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Checks the identifier rule for atom names.
pub fn is_valid_atom_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && name != "bot" && name != "top"
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum TokenKind {
    Ident(String),
    And,
    Or,
    LParen,
    RParen,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(s) => write!(f, "'{s}'"),
            TokenKind::And => f.write_str("'&'"),
            TokenKind::Or => f.write_str("'|'"),
            TokenKind::LParen => f.write_str("'('"),
            TokenKind::RParen => f.write_str("')'"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    column: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        match c {
            ' ' | '\t' | '\r' | '\n' => i += 1,
            '&' => {
                tokens.push(Token {
                    kind: TokenKind::And,
                    column,
                });
                i += 1;
            }
            '|' => {
                tokens.push(Token {
                    kind: TokenKind::Or,
                    column,
                });
                i += 1;
            }
            '(' => {
                tokens.push(Token {
                    kind: TokenKind::LParen,
                    column,
                });
                i += 1;
            }
            ')' => {
                tokens.push(Token {
                    kind: TokenKind::RParen,
                    column,
                });
                i += 1;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let ident: String = chars[start..i].iter().collect();
                tokens.push(Token {
                    kind: TokenKind::Ident(ident),
                    column,
                });
            }
            '!' | '~' => {
                return Err(syntax(column, "negation is not available in expressions"));
            }
            other => return Err(syntax(column, format!("unexpected character '{other}'"))),
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    end_column: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn expr(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.term()?;
        while matches!(self.peek(), Some(t) if t.kind == TokenKind::Or) {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = lhs.join(rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.factor()?;
        while matches!(self.peek(), Some(t) if t.kind == TokenKind::And) {
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = lhs.meet(rhs);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expression, ParseError> {
        let Some(tok) = self.tokens.get(self.pos) else {
            return Err(syntax(self.end_column, "unexpected end of expression"));
        };
        self.pos += 1;
        match &tok.kind {
            TokenKind::Ident(name) if name == "bot" => Ok(Expression::Bot),
            TokenKind::Ident(name) if name == "top" => Ok(Expression::Top),
            TokenKind::Ident(name) => Ok(Expression::Atom(name.clone())),
            TokenKind::LParen => {
                let inner = self.expr()?;
                match self.peek() {
                    Some(t) if t.kind == TokenKind::RParen => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    Some(t) => Err(syntax(t.column, format!("expected ')', found {}", t.kind))),
                    None => Err(syntax(self.end_column, "missing ')'")),
                }
            }
            other => Err(syntax(tok.column, format!("unexpected {other}"))),
        }
    }
}
