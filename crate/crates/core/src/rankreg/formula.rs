//! Model formulas such as `r(Y) ~ r(X) + W1 + W2` or `r(Y) ~ (r(X) + W):G`.
//!
//! ```text
//! formula     := term "~" rhs
//! rhs         := term_sum [":" identifier] | "(" term_sum ")" ":" identifier
//! term_sum    := term ("+" term)*
//! term        := identifier | "r(" identifier ")"
//! ```
//!
//! Whitespace is ignored. Without parentheses a group suffix is only allowed
//! after a single term (`r(Y) ~ r(X):G`).

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormulaError {
    pub formula: String,
    /// Byte offset of the offending token.
    pub position: usize,
    pub message: String,
}

impl fmt::Display for FormulaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let caret_col = self.formula[..self.position.min(self.formula.len())].chars().count();
        writeln!(f, "formula error: {}", self.message)?;
        writeln!(f, "  {}", self.formula)?;
        write!(f, "  {}^", " ".repeat(caret_col))
    }
}

impl std::error::Error for FormulaError {}

/// A variable reference, optionally wrapped in `r()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub name: String,
    pub ranked: bool,
}

impl Term {
    pub fn plain(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ranked: false,
        }
    }

    pub fn ranked(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ranked: true,
        }
    }

    /// `r(X)` or `X`.
    pub fn label(&self) -> String {
        if self.ranked {
            format!("r({})", self.name)
        } else {
            self.name.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedFormula {
    pub response: Term,
    pub regressors: Vec<Term>,
    pub group: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Tilde,
    Plus,
    Colon,
    LParen,
    RParen,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Tilde => "`~`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Colon => "`:`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '.'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '.'
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, FormulaError> {
    let mut toks = Vec::new();
    let mut chars = src.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        let single = match c {
            '~' => Some(Tok::Tilde),
            '+' => Some(Tok::Plus),
            ':' => Some(Tok::Colon),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            toks.push((t, i));
            chars.next();
        } else if c.is_whitespace() {
            chars.next();
        } else if is_ident_start(c) {
            let mut end = i;
            while let Some(&(j, d)) = chars.peek() {
                if !is_ident_char(d) {
                    break;
                }
                end = j + d.len_utf8();
                chars.next();
            }
            toks.push((Tok::Ident(src[i..end].to_string()), i));
        } else {
            return Err(FormulaError {
                formula: src.to_string(),
                position: i,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(toks)
}

impl<'a> Parser<'a> {
    fn error(&self, position: usize, message: impl Into<String>) -> FormulaError {
        FormulaError {
            formula: self.src.to_string(),
            position,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|&(_, o)| o).unwrap_or(self.src.len())
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), FormulaError> {
        match self.toks.get(self.pos) {
            Some((t, _)) if *t == want => {
                self.pos += 1;
                Ok(())
            }
            Some((t, o)) => Err(self.error(*o, format!("expected {what}, found {}", t.describe()))),
            None => Err(self.error(self.src.len(), format!("expected {what}, found end of formula"))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, FormulaError> {
        match self.toks.get(self.pos) {
            Some((Tok::Ident(s), _)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            Some((t, o)) => Err(self.error(*o, format!("expected {what}, found {}", t.describe()))),
            None => Err(self.error(self.src.len(), format!("expected {what}, found end of formula"))),
        }
    }

    fn term(&mut self) -> Result<Term, FormulaError> {
        let name = self.ident("a variable name")?;
        if name == "r" && self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            let inner = self.ident("a variable name inside r()")?;
            self.expect(Tok::RParen, "`)` closing r(")?;
            return Ok(Term::ranked(inner));
        }
        Ok(Term::plain(name))
    }

    fn term_sum(&mut self) -> Result<Vec<Term>, FormulaError> {
        let mut terms = vec![self.term()?];
        while self.peek() == Some(&Tok::Plus) {
            self.pos += 1;
            terms.push(self.term()?);
        }
        Ok(terms)
    }

    fn formula(&mut self) -> Result<ParsedFormula, FormulaError> {
        let response = self.term()?;
        self.expect(Tok::Tilde, "`~`")?;
        let (regressors, group) = if self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            let terms = self.term_sum()?;
            self.expect(Tok::RParen, "`)`")?;
            self.expect(Tok::Colon, "`:` followed by a group variable")?;
            (terms, Some(self.ident("a group variable")?))
        } else {
            let start = self.offset();
            let terms = self.term_sum()?;
            if self.peek() == Some(&Tok::Colon) {
                if terms.len() > 1 {
                    return Err(self.error(start, "wrap the summed terms in parentheses before `:`"));
                }
                self.pos += 1;
                (terms, Some(self.ident("a group variable")?))
            } else {
                (terms, None)
            }
        };
        if let Some((t, o)) = self.toks.get(self.pos) {
            return Err(self.error(*o, format!("unexpected {} after the end of the formula", t.describe())));
        }
        Ok(ParsedFormula {
            response,
            regressors,
            group,
        })
    }
}

pub fn parse_formula(src: &str) -> Result<ParsedFormula, FormulaError> {
    let toks = tokenize(src)?;
    Parser { src, toks, pos: 0 }.formula()
}
