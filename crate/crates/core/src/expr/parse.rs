//! Text form of expressions.
//!
//! ```text
//! expr   := chain
//! chain  := atom (binop chain)?
//! binop  := '+' | '-' | '*' | '/'
//! atom   := 'psi' '(' index ',' expr ')' | 'ip' '(' expr ',' expr ')'
//!         | 'tr' atom | 'red' '(' expr ')' | ident | number | '(' expr ')'
//! index  := '<' (int | 'i' | 'i+1')* '>'
//! ```
//!
//! Operator chains have no precedence and group from the right:
//! `1 - 4 * 2 + 1` reads as `1 - (4 * (2 + 1))`.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{Expr, IndexComp, IndexLit, SymShape};
use crate::array::BinaryOp;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at byte {pos}")]
    UnknownIdent { name: String, pos: usize },
}

/// Parses `text`, resolving identifiers against the declared shapes in `decls`.
pub fn parse_expr(text: &str, decls: &BTreeMap<String, SymShape>) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        decls,
    };
    let e = p.chain()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    decls: &'a BTreeMap<String, SymShape>,
}

impl Parser<'_> {
    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected `{}`", c as char)))
        }
    }

    fn chain(&mut self) -> Result<Expr, ParseError> {
        let left = self.atom()?;
        match self.peek().and_then(|c| BinaryOp::from_symbol(c as char)) {
            Some(op) => {
                self.pos += 1;
                let right = self.chain()?;
                Ok(Expr::binop(op, left, right))
            }
            None => Ok(left),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.chain()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'-' || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                let word = self.ident();
                match word.as_str() {
                    "psi" => {
                        self.expect(b'(')?;
                        let index = self.index()?;
                        self.expect(b',')?;
                        let array = self.chain()?;
                        self.expect(b')')?;
                        Ok(Expr::psi(index, array))
                    }
                    "ip" => {
                        self.expect(b'(')?;
                        let l = self.chain()?;
                        self.expect(b',')?;
                        let r = self.chain()?;
                        self.expect(b')')?;
                        Ok(Expr::ip(l, r))
                    }
                    "red" => {
                        self.expect(b'(')?;
                        let e = self.chain()?;
                        self.expect(b')')?;
                        Ok(Expr::reduce_add(e))
                    }
                    "tr" => Ok(Expr::transpose(self.atom()?)),
                    _ => match self.decls.get(&word) {
                        Some(shape) => Ok(Expr::array(word, shape.clone())),
                        None => Err(ParseError::UnknownIdent {
                            name: word,
                            pos: start,
                        }),
                    },
                }
            }
            Some(c) => Err(self.error(format!("unexpected character `{}`", c as char))),
        }
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let bytes = self.src;
        let mut end = start;
        if bytes.get(end) == Some(&b'-') {
            end += 1;
        }
        while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
            end += 1;
        }
        if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
            end += 1;
            if end < bytes.len() && (bytes[end] == b'-' || bytes[end] == b'+') {
                end += 1;
            }
            while end < bytes.len() && bytes[end].is_ascii_digit() {
                end += 1;
            }
        }
        let text = std::str::from_utf8(&bytes[start..end]).unwrap_or("");
        match text.parse::<f64>() {
            Ok(v) => {
                self.pos = end;
                Ok(Expr::Scalar(v))
            }
            Err(_) => Err(self.error(format!("malformed number `{text}`"))),
        }
    }

    fn index(&mut self) -> Result<IndexLit, ParseError> {
        self.expect(b'<')?;
        let mut comps = Vec::new();
        loop {
            match self.peek() {
                Some(b'>') => {
                    self.pos += 1;
                    return Ok(IndexLit(comps));
                }
                Some(c) if c.is_ascii_digit() => {
                    let start = self.pos;
                    while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                        self.pos += 1;
                    }
                    let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                    let v = text.parse().map_err(|_| ParseError::Syntax {
                        pos: start,
                        msg: format!("index component `{text}` too large"),
                    })?;
                    comps.push(IndexComp::Const(v));
                }
                Some(b'i') => {
                    self.pos += 1;
                    if self.src[self.pos..].starts_with(b"+1") {
                        self.pos += 2;
                        comps.push(IndexComp::IPlus1);
                    } else {
                        comps.push(IndexComp::I);
                    }
                }
                Some(_) => return Err(self.error("expected an index component, `i`, or `i+1`")),
                None => return Err(self.error("unterminated index")),
            }
        }
    }
}
