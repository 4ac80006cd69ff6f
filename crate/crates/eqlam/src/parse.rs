//! S-expression parsing for terms, patterns and problem files.
//!
//! The term grammar is:
//!
//! ```text
//! term   := "(bvar" NAT [":" STRING] ")"
//!         | "(app" term term+ ")"          -- n-ary app is left-assoc sugar
//!         | "(lam" term term ")"
//!         | "(all" term term ")"
//!         | "(let" term term term ")"
//!         | "(lit" NAT ")"
//!         | "eps"
//!         | SYMBOL
//! SYMBOL := [A-Za-z_][A-Za-z0-9_.']*
//! ```
//!
//! Patterns additionally allow `?IDENT` metavariables anywhere a term may
//! appear, except as a bvar index.

use std::fmt;

use thiserror::Error;

use crate::pattern::Pattern;
use crate::term::Term;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("invalid index at byte {offset}: bvar indices must be non-negative")]
    NegativeIndex { offset: usize },
}

impl ParseError {
    fn syntax(offset: usize, message: impl Into<String>) -> ParseError {
        ParseError::Syntax { offset, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    LParen,
    RParen,
    Colon,
    Str(String),
    Atom(String),
    MetaVar(String),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::LParen => write!(f, "'('"),
            Token::RParen => write!(f, "')'"),
            Token::Colon => write!(f, "':'"),
            Token::Str(s) => write!(f, "\"{s}\""),
            Token::Atom(s) => write!(f, "'{s}'"),
            Token::MetaVar(s) => write!(f, "'?{s}'"),
        }
    }
}

fn is_symbol_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

// The lexer accepts '-' inside atoms for hyphenated config keys; term
// symbols reject it separately to keep the SYMBOL grammar exact.
fn is_symbol_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '\'' || c == '-'
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src, bytes: src.as_bytes(), pos: 0 }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos];
            if c.is_ascii_whitespace() {
                self.pos += 1;
            } else if c == b';' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn next(&mut self) -> Result<Option<(Token, usize)>, ParseError> {
        self.skip_ws();
        if self.pos >= self.bytes.len() {
            return Ok(None);
        }
        let start = self.pos;
        let c = self.bytes[self.pos];
        let tok = match c {
            b'(' => {
                self.pos += 1;
                Token::LParen
            }
            b')' => {
                self.pos += 1;
                Token::RParen
            }
            b':' => {
                self.pos += 1;
                Token::Colon
            }
            b'"' => {
                self.pos += 1;
                let str_start = self.pos;
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'"' {
                    self.pos += 1;
                }
                if self.pos >= self.bytes.len() {
                    return Err(ParseError::syntax(start, "unterminated string"));
                }
                let s = self.src[str_start..self.pos].to_string();
                self.pos += 1;
                Token::Str(s)
            }
            b'?' => {
                self.pos += 1;
                let name_start = self.pos;
                while self.pos < self.bytes.len()
                    && is_symbol_continue(self.bytes[self.pos] as char)
                {
                    self.pos += 1;
                }
                if self.pos == name_start
                    || !is_symbol_start(self.bytes[name_start] as char)
                {
                    return Err(ParseError::syntax(start, "expected identifier after '?'"));
                }
                Token::MetaVar(self.src[name_start..self.pos].to_string())
            }
            _ if c.is_ascii_digit() => {
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                Token::Atom(self.src[start..self.pos].to_string())
            }
            b'-' if self.pos + 1 < self.bytes.len()
                && self.bytes[self.pos + 1].is_ascii_digit() =>
            {
                // Scan the whole negative numeral so the error points at it.
                self.pos += 1;
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                Token::Atom(self.src[start..self.pos].to_string())
            }
            _ if is_symbol_start(c as char) => {
                while self.pos < self.bytes.len()
                    && is_symbol_continue(self.bytes[self.pos] as char)
                {
                    self.pos += 1;
                }
                Token::Atom(self.src[start..self.pos].to_string())
            }
            _ => {
                return Err(ParseError::syntax(
                    start,
                    format!("unexpected character '{}'", c as char),
                ))
            }
        };
        Ok(Some((tok, start)))
    }
}

pub(crate) struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: Option<Option<(Token, usize)>>,
}

impl<'a> Parser<'a> {
    pub(crate) fn new(src: &'a str) -> Self {
        Parser { lexer: Lexer::new(src), peeked: None }
    }

    fn peek(&mut self) -> Result<Option<&(Token, usize)>, ParseError> {
        if self.peeked.is_none() {
            self.peeked = Some(self.lexer.next()?);
        }
        Ok(self.peeked.as_ref().unwrap().as_ref())
    }

    fn bump(&mut self) -> Result<Option<(Token, usize)>, ParseError> {
        match self.peeked.take() {
            Some(t) => Ok(t),
            None => self.lexer.next(),
        }
    }

    fn expect_any(&mut self, what: &str) -> Result<(Token, usize), ParseError> {
        match self.bump()? {
            Some(t) => Ok(t),
            None => Err(ParseError::syntax(self.lexer.pos, format!("expected {what}, found end of input"))),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.expect_any("')'")? {
            (Token::RParen, _) => Ok(()),
            (tok, off) => Err(ParseError::syntax(off, format!("expected ')', found {tok}"))),
        }
    }

    fn expect_atom(&mut self, what: &str) -> Result<(String, usize), ParseError> {
        match self.expect_any(what)? {
            (Token::Atom(s), off) => Ok((s, off)),
            (tok, off) => Err(ParseError::syntax(off, format!("expected {what}, found {tok}"))),
        }
    }

    fn parse_nat<T: std::str::FromStr>(&mut self, what: &str) -> Result<T, ParseError> {
        let (s, off) = self.expect_atom(what)?;
        if s.starts_with('-') {
            return Err(ParseError::NegativeIndex { offset: off });
        }
        s.parse::<T>()
            .map_err(|_| ParseError::syntax(off, format!("invalid {what} '{s}'")))
    }

    /// Parse one pattern (metavariables permitted iff `metas`).
    pub(crate) fn pattern(&mut self, metas: bool) -> Result<Pattern, ParseError> {
        let (tok, off) = self.expect_any("a term")?;
        match tok {
            Token::MetaVar(name) => {
                if !metas {
                    Err(ParseError::syntax(off, "metavariables are not allowed here"))
                } else if name.contains('-') {
                    Err(ParseError::syntax(off, format!("'-' is not allowed in metavariables: '?{name}'")))
                } else {
                    Ok(Pattern::Var(name))
                }
            }
            Token::Atom(s) => {
                if s == "eps" {
                    Ok(Pattern::Eps)
                } else if s.starts_with('-') {
                    Err(ParseError::NegativeIndex { offset: off })
                } else if s.chars().next().is_some_and(|c| c.is_ascii_digit()) {
                    Err(ParseError::syntax(off, "bare numerals are not terms; use (lit N)"))
                } else if s.contains('-') {
                    Err(ParseError::syntax(off, format!("'-' is not allowed in symbols: '{s}'")))
                } else {
                    Ok(Pattern::Sym(s))
                }
            }
            Token::LParen => {
                let (head, head_off) = self.expect_atom("a term head")?;
                let node = match head.as_str() {
                    "bvar" => {
                        let index: u32 = self.parse_nat("bvar index")?;
                        let tag = match self.peek()? {
                            Some((Token::Colon, _)) => {
                                self.bump()?;
                                match self.expect_any("a string tag")? {
                                    (Token::Str(s), _) => Some(s),
                                    (tok, off) => {
                                        return Err(ParseError::syntax(
                                            off,
                                            format!("expected a string tag, found {tok}"),
                                        ))
                                    }
                                }
                            }
                            _ => None,
                        };
                        Pattern::Bvar { index, tag }
                    }
                    "app" => {
                        let f = self.pattern(metas)?;
                        let first = self.pattern(metas)?;
                        let mut acc = Pattern::App(Box::new(f), Box::new(first));
                        loop {
                            match self.peek()? {
                                Some((Token::RParen, _)) => break,
                                Some(_) => {
                                    let next = self.pattern(metas)?;
                                    acc = Pattern::App(Box::new(acc), Box::new(next));
                                }
                                None => {
                                    return Err(ParseError::syntax(
                                        self.lexer.pos,
                                        "unterminated application",
                                    ))
                                }
                            }
                        }
                        self.expect_rparen()?;
                        return Ok(acc);
                    }
                    "lam" => {
                        let ty = self.pattern(metas)?;
                        let body = self.pattern(metas)?;
                        Pattern::Lam(Box::new(ty), Box::new(body))
                    }
                    "all" => {
                        let ty = self.pattern(metas)?;
                        let body = self.pattern(metas)?;
                        Pattern::All(Box::new(ty), Box::new(body))
                    }
                    "let" => {
                        let ty = self.pattern(metas)?;
                        let value = self.pattern(metas)?;
                        let body = self.pattern(metas)?;
                        Pattern::Let(Box::new(ty), Box::new(value), Box::new(body))
                    }
                    "lit" => {
                        let value: u64 = self.parse_nat("literal value")?;
                        Pattern::Lit(value)
                    }
                    other => {
                        return Err(ParseError::syntax(
                            head_off,
                            format!("unknown term head '{other}'"),
                        ))
                    }
                };
                self.expect_rparen()?;
                Ok(node)
            }
            other => Err(ParseError::syntax(off, format!("expected a term, found {other}"))),
        }
    }

    pub(crate) fn end(&mut self) -> Result<(), ParseError> {
        match self.bump()? {
            None => Ok(()),
            Some((tok, off)) => {
                Err(ParseError::syntax(off, format!("trailing input: {tok}")))
            }
        }
    }

    pub(crate) fn expect_lparen(&mut self) -> Result<(), ParseError> {
        match self.expect_any("'('")? {
            (Token::LParen, _) => Ok(()),
            (tok, off) => Err(ParseError::syntax(off, format!("expected '(', found {tok}"))),
        }
    }

    pub(crate) fn expect_keyword(&mut self, keyword: &str) -> Result<(), ParseError> {
        match self.expect_any(keyword)? {
            (Token::Atom(s), _) if s == keyword => Ok(()),
            (tok, off) => {
                Err(ParseError::syntax(off, format!("expected '{keyword}', found {tok}")))
            }
        }
    }

    /// Consume a ')' if it is next.
    pub(crate) fn try_rparen(&mut self) -> Result<bool, ParseError> {
        if matches!(self.peek()?, Some((Token::RParen, _))) {
            self.bump()?;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    /// Consume a ':' if it is next.
    pub(crate) fn try_colon(&mut self) -> Result<bool, ParseError> {
        if matches!(self.peek()?, Some((Token::Colon, _))) {
            self.bump()?;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    pub(crate) fn expect_atom_tok(&mut self, what: &str) -> Result<(String, usize), ParseError> {
        self.expect_atom(what)
    }

    pub(crate) fn expect_rparen_tok(&mut self) -> Result<(), ParseError> {
        self.expect_rparen()
    }
}

/// Parse a single plain term (no metavariables).
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(text);
    let pat = p.pattern(false)?;
    p.end()?;
    Ok(pat.into_term().expect("metavariables rejected by the parser"))
}

/// Parse a single pattern (metavariables allowed).
pub fn parse_pattern(text: &str) -> Result<Pattern, ParseError> {
    let mut p = Parser::new(text);
    let pat = p.pattern(true)?;
    p.end()?;
    Ok(pat)
}
