//! Recursive-descent parser for the formula DSL.
//!
//! ```text
//! formula := or
//! or      := and ("|" and)*
//! and     := unary ("&" unary)*
//! unary   := "!" unary | ("E"|"A") IDENT "." or | "(" formula ")"
//!          | "true" | "false" | atom
//! atom    := IDENT "(" term ("," term)* ")" | term ("=" | "<=" | "<") term
//!          | term "=" NUMBER
//! term    := IDENT | "0" | "1" | "max"
//! ```
//!
//! `t = k` with `k >= 2` is expanded on the spot by [`expand_numeral`].

use crate::fologic::ast::{expand_numeral, Formula, Term, NUMERAL_VAR_PREFIX};
use crate::fologic::FormulaError;
use crate::structures::{NumConst, NumPred, Vocabulary};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Number(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Bang,
    Amp,
    Pipe,
    Eq,
    Le,
    Lt,
    End,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, FormulaError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'.' => Tok::Dot,
            b'!' => Tok::Bang,
            b'&' => Tok::Amp,
            b'|' => Tok::Pipe,
            b'=' => Tok::Eq,
            b'<' if bytes.get(i + 1) == Some(&b'=') => {
                i += 1;
                Tok::Le
            }
            b'<' => Tok::Lt,
            b'0'..=b'9' => {
                while i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit() {
                    i += 1;
                }
                Tok::Number(text[start..=i].to_string())
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i + 1 < bytes.len() && (bytes[i + 1].is_ascii_alphanumeric() || bytes[i + 1] == b'_') {
                    i += 1;
                }
                Tok::Ident(text[start..=i].to_string())
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(FormulaError::Syntax { pos: i, msg: format!("unexpected character `{ch}`") });
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'v> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    vocab: &'v Vocabulary,
}

/// Parses `text` against the input vocabulary `vocab`.
pub fn parse_formula(text: &str, vocab: &Vocabulary) -> Result<Formula, FormulaError> {
    let mut p = Parser { toks: lex(text)?, at: 0, vocab };
    let f = p.or()?;
    match p.peek() {
        Tok::End => Ok(f),
        t => Err(p.err(format!("unexpected {t:?} after formula"))),
    }
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.at + k).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn err(&self, msg: String) -> FormulaError {
        FormulaError::Syntax { pos: self.pos(), msg }
    }

    fn expect(&mut self, want: Tok) -> Result<(), FormulaError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected {want:?}, found {:?}", self.peek())))
        }
    }

    fn or(&mut self) -> Result<Formula, FormulaError> {
        let mut parts = vec![self.and()?];
        while *self.peek() == Tok::Pipe {
            self.bump();
            parts.push(self.and()?);
        }
        Ok(Formula::or(parts))
    }

    fn and(&mut self) -> Result<Formula, FormulaError> {
        let mut parts = vec![self.unary()?];
        while *self.peek() == Tok::Amp {
            self.bump();
            parts.push(self.unary()?);
        }
        Ok(Formula::and(parts))
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::LParen => {
                self.bump();
                let f = self.or()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Ident(q)
                if (q == "E" || q == "A")
                    && matches!(self.peek_at(1), Tok::Ident(_))
                    && *self.peek_at(2) == Tok::Dot =>
            {
                self.bump();
                let Tok::Ident(var) = self.bump() else { unreachable!() };
                if is_keyword(&var) {
                    return Err(self.err(format!("`{var}` cannot be bound")));
                }
                self.bump();
                let body = self.or()?;
                Ok(if q == "E" { Formula::Exists(var, Box::new(body)) } else { Formula::ForAll(var, Box::new(body)) })
            }
            Tok::Ident(k) if k == "true" => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::Ident(k) if k == "false" => {
                self.bump();
                Ok(Formula::False)
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula, FormulaError> {
        let start = self.pos();
        if let (Tok::Ident(name), Tok::LParen) = (self.peek().clone(), self.peek_at(1).clone()) {
            self.bump();
            self.bump();
            let mut args = vec![self.term()?];
            while *self.peek() == Tok::Comma {
                self.bump();
                args.push(self.term()?);
            }
            self.expect(Tok::RParen)?;
            return self.application(name, args, start);
        }
        let lhs = self.term()?;
        let op = match self.peek() {
            Tok::Eq => NumPred::Eq,
            Tok::Le => NumPred::Le,
            Tok::Lt => NumPred::Lt,
            t => return Err(self.err(format!("expected `=`, `<=` or `<`, found {t:?}"))),
        };
        self.bump();
        if let (NumPred::Eq, Tok::Number(digits)) = (op, self.peek().clone()) {
            if digits != "0" && digits != "1" {
                self.bump();
                let k: usize = digits
                    .parse()
                    .map_err(|_| FormulaError::Syntax { pos: start, msg: format!("numeral {digits} too large") })?;
                if let Term::Var(v) = &lhs {
                    if v.starts_with(NUMERAL_VAR_PREFIX) {
                        return Err(FormulaError::Syntax {
                            pos: start,
                            msg: format!("`{v}` is reserved for numeral expansion"),
                        });
                    }
                }
                return Ok(expand_numeral(lhs, k));
            }
        }
        let rhs = self.term()?;
        Ok(Formula::numeric(op, vec![lhs, rhs]))
    }

    fn application(&self, name: String, args: Vec<Term>, pos: usize) -> Result<Formula, FormulaError> {
        if let Some(pred) = NumPred::from_name(&name).filter(|p| matches!(p, NumPred::Suc | NumPred::Plus | NumPred::Times)) {
            if args.len() != pred.arity() {
                return Err(FormulaError::ArityMismatch { name, expected: pred.arity(), found: args.len(), pos });
            }
            return Ok(Formula::numeric(pred, args));
        }
        match self.vocab.arity(&name) {
            None => Err(FormulaError::UnknownRelation { name, pos }),
            Some(a) if a != args.len() => {
                Err(FormulaError::ArityMismatch { name, expected: a, found: args.len(), pos })
            }
            Some(_) => Ok(Formula::Input { rel: name, args }),
        }
    }

    fn term(&mut self) -> Result<Term, FormulaError> {
        match self.peek().clone() {
            Tok::Number(d) => {
                let c = NumConst::from_name(&d)
                    .ok_or_else(|| self.err(format!("numeral {d} is only allowed as `term = {d}`")))?;
                self.bump();
                Ok(Term::Const(c))
            }
            Tok::Ident(name) if name == "max" => {
                self.bump();
                Ok(Term::Const(NumConst::Max))
            }
            Tok::Ident(name) if !is_keyword(&name) => {
                self.bump();
                Ok(Term::Var(name))
            }
            t => Err(self.err(format!("expected a term, found {t:?}"))),
        }
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(s, "true" | "false" | "max" | "E" | "A" | "SUC" | "PLUS" | "TIMES")
}
