//! Recursive-descent parser for right-hand sides `f(x, u, p, q, r)`.
//!
//! ```text
//! expr     := term (("+" | "-") term)*
//! term     := factor (("*" | "/") factor)*
//! factor   := ("-" | "+") factor | base ("^" exponent)?
//! base     := number | ident | "(" expr ")" | func "(" args ")"
//! exponent := ("-" | "+")* number | ident | "(" expr ")"
//! func     := "exp" | "sqrt" | "root"
//! ```
//!
//! `root(g, k)` and `root(g, k, b)` denote the k-th root on branch b. Numbers are
//! integers or decimals and are kept exact. `r^4/3` reads as `(r^4)/3`.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use super::{Expr, JetVar, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownIdentifier(String),
    JetDependentExponent,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{} at byte {offset}", describe(.kind))]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

fn describe(kind: &ParseErrorKind) -> String {
    match kind {
        ParseErrorKind::Syntax(m) => format!("syntax error: {m}"),
        ParseErrorKind::UnknownIdentifier(n) => format!("unknown identifier `{n}`"),
        ParseErrorKind::JetDependentExponent => "exponent depends on a jet variable".to_string(),
    }
}

#[derive(Debug, Clone)]
#[derive(Default)]
pub struct ParseOptions {
    /// Accept the prolonged coordinate `a13`.
    pub allow_a13: bool,
    /// Parameter names accepted; `None` accepts any letters-only identifier.
    pub params: Option<BTreeSet<String>>,
}


const RESERVED: [&str; 9] = ["x", "u", "p", "q", "r", "a13", "exp", "sqrt", "root"];

pub fn parse(text: &str) -> Result<Expr, ParseError> {
    parse_with(text, &ParseOptions::default())
}

pub fn parse_with(text: &str, opts: &ParseOptions) -> Result<Expr, ParseError> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, pos: 0, opts, end: text.len() };
    let e = p.expr()?;
    match p.peek() {
        Tok::End => Ok(e),
        t => Err(p.err(format!("unexpected {}", t.describe()))),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Op(char),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(n) => format!("number {n}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::End => "end of input".to_string(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let mut value = Rational::from_integer(text[start..i].parse::<BigInt>().unwrap_or_default());
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                let frac_start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i > frac_start {
                    let digits = &text[frac_start..i];
                    let num: BigInt = digits.parse().unwrap_or_default();
                    let den = num_traits::pow::pow(BigInt::from(10), digits.len());
                    value += Rational::new(num, den);
                }
            }
            out.push((Tok::Num(value), start));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
        } else if b"+-*/^(),".contains(&c) {
            out.push((Tok::Op(c as char), i));
            i += 1;
        } else {
            let ch = text[i..].chars().next().unwrap_or('?');
            return Err(ParseError {
                kind: ParseErrorKind::Syntax(format!("unexpected character `{ch}`")),
                offset: i,
            });
        }
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    opts: &'a ParseOptions,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].0
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.1)
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].0.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: String) -> ParseError {
        ParseError { kind: ParseErrorKind::Syntax(msg), offset: self.offset() }
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Op(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}`, found {}", self.peek().describe())))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat('+') {
                terms.push(self.term()?);
            } else if self.eat('-') {
                terms.push(-self.term()?);
            } else {
                return Ok(Expr::sum(terms));
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            if self.eat('*') {
                acc = acc * self.factor()?;
            } else if self.eat('/') {
                acc = acc / self.factor()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(-self.factor()?);
        }
        if self.eat('+') {
            return self.factor();
        }
        let base = self.base()?;
        if self.eat('^') {
            let at = self.offset();
            let exponent = self.exponent()?;
            if !exponent.is_free_of_jet() {
                return Err(ParseError { kind: ParseErrorKind::JetDependentExponent, offset: at });
            }
            return Ok(Expr::pow(&base, &exponent));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(-self.exponent()?);
        }
        if self.eat('+') {
            return self.exponent();
        }
        match self.peek() {
            Tok::Num(_) | Tok::Ident(_) => self.base(),
            Tok::Op('(') => self.base(),
            t => Err(self.err(format!("expected exponent, found {}", t.describe()))),
        }
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        match self.bump() {
            Tok::Num(n) => Ok(Expr::constant(n)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => self.ident(name, at),
            t => Err(ParseError { kind: ParseErrorKind::Syntax(format!("unexpected {}", t.describe())), offset: at }),
        }
    }

    fn ident(&mut self, name: String, at: usize) -> Result<Expr, ParseError> {
        let unknown = |name: String| ParseError { kind: ParseErrorKind::UnknownIdentifier(name), offset: at };
        if *self.peek() == Tok::Op('(') {
            self.bump();
            let mut args = vec![self.expr()?];
            while self.eat(',') {
                args.push(self.expr()?);
            }
            self.expect(')')?;
            return match (name.as_str(), args.len()) {
                ("exp", 1) => Ok(args[0].exp()),
                ("sqrt", 1) => Ok(Expr::root(&args[0], 2, 0)),
                ("root", 2 | 3) => {
                    let index = small_int(&args[1]).filter(|k| *k >= 1);
                    let branch = args.get(2).map_or(Some(0), small_int);
                    match (index, branch) {
                        (Some(k), Some(b)) if b < k => Ok(Expr::root(&args[0], k, b)),
                        _ => Err(ParseError {
                            kind: ParseErrorKind::Syntax("root index and branch must be integers with 0 <= branch < index".into()),
                            offset: at,
                        }),
                    }
                }
                ("exp" | "sqrt" | "root", n) => Err(ParseError {
                    kind: ParseErrorKind::Syntax(format!("wrong number of arguments ({n}) for `{name}`")),
                    offset: at,
                }),
                _ => Err(unknown(name)),
            };
        }
        if let Some(v) = JetVar::from_name(&name) {
            if v == JetVar::A13 && !self.opts.allow_a13 {
                return Err(unknown(name));
            }
            return Ok(Expr::var(v));
        }
        if RESERVED.contains(&name.as_str()) || !name.chars().all(|c| c.is_ascii_alphabetic()) {
            return Err(unknown(name));
        }
        match &self.opts.params {
            Some(allowed) if !allowed.contains(&name) => Err(unknown(name)),
            _ => Ok(Expr::param(&name)),
        }
    }
}

fn small_int(e: &Expr) -> Option<u32> {
    let c = e.as_const()?;
    if !c.denom().is_one() || c.numer() < &BigInt::zero() {
        return None;
    }
    c.numer().to_u32()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ExprKind;

    #[test]
    fn square_is_power_node() {
        let e = parse("r^2").unwrap();
        match e.kind() {
            ExprKind::Pow(b, x) => {
                assert_eq!(*b, Expr::r());
                assert_eq!(*x, Expr::int(2));
            }
            k => panic!("{k:?}"),
        }
    }

    #[test]
    fn exponent_binds_before_division() {
        assert_eq!(parse("r^4/3").unwrap(), Expr::r().powi(4) / Expr::int(3));
        assert_eq!(parse("r^-1").unwrap(), Expr::r().recip());
    }

    #[test]
    fn parameter_exponent() {
        let e = parse("r^((b-3)/(b-2))").unwrap();
        assert!(matches!(e.kind(), ExprKind::Pow(..)));
        assert!(e.has_params());
    }

    #[test]
    fn syntax_error_has_offset() {
        let err = parse("r^2+").unwrap_err();
        assert_eq!(err.offset, 4);
        assert!(matches!(err.kind, ParseErrorKind::Syntax(_)));
    }

    #[test]
    fn unknown_identifiers() {
        assert!(matches!(parse("sin(x)").unwrap_err().kind, ParseErrorKind::UnknownIdentifier(_)));
        assert!(matches!(parse("y2 + x").unwrap_err().kind, ParseErrorKind::UnknownIdentifier(_)));
        assert!(matches!(parse("a13").unwrap_err().kind, ParseErrorKind::UnknownIdentifier(_)));
        let opts = ParseOptions { allow_a13: false, params: Some(["K".to_string()].into()) };
        assert!(parse_with("K*r^2/q", &opts).is_ok());
        assert!(matches!(parse_with("b*r", &opts).unwrap_err().kind, ParseErrorKind::UnknownIdentifier(_)));
    }

    #[test]
    fn jet_exponent_rejected() {
        assert_eq!(parse("r^(x)").unwrap_err().kind, ParseErrorKind::JetDependentExponent);
    }

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse("0.25*x").unwrap(), Expr::ratio(1, 4) * Expr::x());
    }
}
