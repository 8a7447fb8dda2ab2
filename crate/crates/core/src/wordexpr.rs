//! Group words with integer, rational and p-adic exponents.
//!
//! Text grammar (juxtaposition is the product, `^` binds tighter):
//!
//! ```text
//! expr     := term+
//! term     := atom ('^' exponent)?
//! atom     := name | '(' expr ')' | '[' expr ',' expr ']' | '1'
//! exponent := int | '(' int ')' | '(' int '/' posint ')' | 'Zp(' int ';' posint ')'
//! ```
//!
//! `[u, v]` denotes `u v u^-1 v^-1`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalars::{exponent_to_i64, Exponent, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WordExpr {
    Generator { name: String },
    /// The empty product is the identity.
    Product { factors: Vec<WordExpr> },
    Power { base: Box<WordExpr>, exponent: Exponent },
    Commutator { u: Box<WordExpr>, v: Box<WordExpr> },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown generator `{name}` at position {pos}")]
    UnknownGenerator { pos: usize, name: String },
    #[error("zero denominator at position {pos}")]
    ZeroDenominator { pos: usize },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { pos, .. }
            | ParseError::UnknownGenerator { pos, .. }
            | ParseError::ZeroDenominator { pos } => *pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    #[error("exponent {0} is not an integer")]
    NonIntegerExponent(String),
    #[error("exponent {0} is too large to expand")]
    ExponentTooLarge(String),
    #[error("no image given for generator `{0}`")]
    MissingImage(String),
}

/// A letter of a free-group word: a generator or its inverse.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter<G = String> {
    pub gen: G,
    pub inverse: bool,
}

impl<G: Clone> Letter<G> {
    pub fn new(gen: G, inverse: bool) -> Self {
        Letter { gen, inverse }
    }

    pub fn inv(&self) -> Self {
        Letter {
            gen: self.gen.clone(),
            inverse: !self.inverse,
        }
    }
}

impl WordExpr {
    pub fn gen(name: impl Into<String>) -> Self {
        WordExpr::Generator { name: name.into() }
    }

    pub fn identity() -> Self {
        WordExpr::Product { factors: vec![] }
    }

    pub fn product(factors: Vec<WordExpr>) -> Self {
        WordExpr::Product { factors }
    }

    pub fn pow(base: WordExpr, exponent: Exponent) -> Self {
        WordExpr::Power {
            base: Box::new(base),
            exponent,
        }
    }

    pub fn inverse(self) -> Self {
        WordExpr::pow(self, Exponent::int(-1))
    }

    pub fn commutator(u: WordExpr, v: WordExpr) -> Self {
        WordExpr::Commutator {
            u: Box::new(u),
            v: Box::new(v),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, WordExpr::Product { factors } if factors.is_empty())
    }

    /// Generator names in order of first occurrence.
    pub fn generators(&self) -> Vec<String> {
        fn walk(w: &WordExpr, out: &mut Vec<String>) {
            match w {
                WordExpr::Generator { name } => {
                    if !out.contains(name) {
                        out.push(name.clone());
                    }
                }
                WordExpr::Product { factors } => factors.iter().for_each(|f| walk(f, out)),
                WordExpr::Power { base, .. } => walk(base, out),
                WordExpr::Commutator { u, v } => {
                    walk(u, out);
                    walk(v, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    /// True when every exponent is an integer.
    pub fn is_integral(&self) -> bool {
        match self {
            WordExpr::Generator { .. } => true,
            WordExpr::Product { factors } => factors.iter().all(WordExpr::is_integral),
            WordExpr::Power { base, exponent } => {
                matches!(exponent, Exponent::Integer(_)) && base.is_integral()
            }
            WordExpr::Commutator { u, v } => u.is_integral() && v.is_integral(),
        }
    }

    /// Homomorphic substitution of generators; exponents are left alone.
    pub fn substitute(&self, images: &BTreeMap<String, WordExpr>) -> Result<WordExpr, WordError> {
        Ok(match self {
            WordExpr::Generator { name } => images
                .get(name)
                .cloned()
                .ok_or_else(|| WordError::MissingImage(name.clone()))?,
            WordExpr::Product { factors } => WordExpr::Product {
                factors: factors
                    .iter()
                    .map(|f| f.substitute(images))
                    .collect::<Result<_, _>>()?,
            },
            WordExpr::Power { base, exponent } => WordExpr::Power {
                base: Box::new(base.substitute(images)?),
                exponent: exponent.clone(),
            },
            WordExpr::Commutator { u, v } => WordExpr::Commutator {
                u: Box::new(u.substitute(images)?),
                v: Box::new(v.substitute(images)?),
            },
        })
    }

    /// Freely reduced letter sequence of an integer-exponent word.
    pub fn free_reduce(&self) -> Result<Vec<Letter>, WordError> {
        let mut out = Vec::new();
        self.expand_into(&mut out, false)?;
        Ok(reduce_letters(out))
    }

    fn expand_into(&self, out: &mut Vec<Letter>, invert: bool) -> Result<(), WordError> {
        match self {
            WordExpr::Generator { name } => push_reduced(out, Letter::new(name.clone(), invert)),
            WordExpr::Product { factors } => {
                if invert {
                    for f in factors.iter().rev() {
                        f.expand_into(out, true)?;
                    }
                } else {
                    for f in factors {
                        f.expand_into(out, false)?;
                    }
                }
            }
            WordExpr::Power { base, exponent } => {
                let n = exponent
                    .as_integer()
                    .ok_or_else(|| WordError::NonIntegerExponent(exponent.to_string()))?;
                let count = exponent_to_i64(n)
                    .filter(|c| c.unsigned_abs() <= 1 << 24)
                    .ok_or_else(|| WordError::ExponentTooLarge(n.to_string()))?;
                let inner_invert = invert ^ (count < 0);
                for _ in 0..count.unsigned_abs() {
                    base.expand_into(out, inner_invert)?;
                }
            }
            WordExpr::Commutator { u, v } => {
                let seq = [(u, false), (v, false), (u, true), (v, true)];
                let seq: Vec<_> = if invert {
                    // (u v u^-1 v^-1)^-1 = v u v^-1 u^-1
                    seq.iter().rev().map(|(w, i)| (*w, !i)).collect()
                } else {
                    seq.to_vec()
                };
                for (w, i) in seq {
                    w.expand_into(out, i)?;
                }
            }
        }
        Ok(())
    }
}

fn push_reduced<G: PartialEq + Clone>(out: &mut Vec<Letter<G>>, l: Letter<G>) {
    if let Some(last) = out.last() {
        if last.gen == l.gen && last.inverse != l.inverse {
            out.pop();
            return;
        }
    }
    out.push(l);
}

/// Free reduction of an arbitrary letter sequence.
pub fn reduce_letters<G: PartialEq + Clone>(letters: Vec<Letter<G>>) -> Vec<Letter<G>> {
    let mut out = Vec::with_capacity(letters.len());
    for l in letters {
        push_reduced(&mut out, l);
    }
    out
}

/// Inverse of a letter sequence.
pub fn invert_letters<G: Clone>(letters: &[Letter<G>]) -> Vec<Letter<G>> {
    letters.iter().rev().map(Letter::inv).collect()
}

/// Rebuild an expression from letters, grouping runs into powers.
pub fn letters_to_expr(letters: &[Letter]) -> WordExpr {
    let mut factors: Vec<WordExpr> = Vec::new();
    let mut i = 0;
    while i < letters.len() {
        let mut j = i;
        while j < letters.len() && letters[j] == letters[i] {
            j += 1;
        }
        let run = (j - i) as i64;
        let g = WordExpr::gen(letters[i].gen.clone());
        let e = if letters[i].inverse { -run } else { run };
        factors.push(if e == 1 {
            g
        } else {
            WordExpr::pow(g, Exponent::int(e))
        });
        i = j;
    }
    if factors.len() == 1 {
        factors.pop().unwrap()
    } else {
        WordExpr::product(factors)
    }
}

// ---------------------------------------------------------------------------
// Printing

impl fmt::Display for WordExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WordExpr::Generator { name } => f.write_str(name),
            WordExpr::Product { factors } if factors.is_empty() => f.write_str("1"),
            WordExpr::Product { factors } => {
                for (i, x) in factors.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    match x {
                        WordExpr::Product { factors } if !factors.is_empty() => write!(f, "({x})")?,
                        _ => write!(f, "{x}")?,
                    }
                }
                Ok(())
            }
            WordExpr::Power { base, exponent } => {
                match base.as_ref() {
                    WordExpr::Generator { .. } | WordExpr::Commutator { .. } => write!(f, "{base}")?,
                    WordExpr::Product { factors } if factors.is_empty() => f.write_str("1")?,
                    _ => write!(f, "({base})")?,
                }
                write!(f, "^{exponent}")
            }
            WordExpr::Commutator { u, v } => write!(f, "[{u}, {v}]"),
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing

/// Parse without restricting generator names.
pub fn parse(text: &str) -> Result<WordExpr, ParseError> {
    Parser::new(text, None).parse_all()
}

/// Parse, rejecting names outside `generators`.
pub fn parse_in(text: &str, generators: &[String]) -> Result<WordExpr, ParseError> {
    Parser::new(text, Some(generators)).parse_all()
}

impl FromStr for WordExpr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    context: Option<&'a [String]>,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, context: Option<&'a [String]>) -> Self {
        Parser {
            src: text.as_bytes(),
            pos: 0,
            context,
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.pos,
            msg: msg.into(),
        })
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
            self.err(format!("expected `{}`", c as char))
        }
    }

    fn parse_all(mut self) -> Result<WordExpr, ParseError> {
        let e = self.expr()?;
        if self.peek().is_some() {
            return self.err("unexpected trailing input");
        }
        Ok(e)
    }

    fn starts_atom(c: u8) -> bool {
        c == b'(' || c == b'[' || c == b'1' || c == b'_' || c.is_ascii_alphabetic()
    }

    fn expr(&mut self) -> Result<WordExpr, ParseError> {
        let mut terms = Vec::new();
        while let Some(c) = self.peek() {
            if !Self::starts_atom(c) {
                break;
            }
            terms.push(self.term()?);
        }
        match terms.len() {
            0 => self.err("expected a word"),
            1 => Ok(terms.pop().unwrap()),
            _ => Ok(WordExpr::product(terms)),
        }
    }

    fn term(&mut self) -> Result<WordExpr, ParseError> {
        let atom = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exponent = self.exponent()?;
            if self.peek() == Some(b'^') {
                return self.err("stacked exponents need parentheses");
            }
            return Ok(WordExpr::pow(atom, exponent));
        }
        Ok(atom)
    }

    fn atom(&mut self) -> Result<WordExpr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(b'[') => {
                self.pos += 1;
                let u = self.expr()?;
                self.expect(b',')?;
                let v = self.expr()?;
                self.expect(b']')?;
                Ok(WordExpr::commutator(u, v))
            }
            Some(b'1') => {
                self.pos += 1;
                if self.src.get(self.pos).is_some_and(|c| c.is_ascii_alphanumeric()) {
                    return self.err("only `1` may start with a digit");
                }
                Ok(WordExpr::identity())
            }
            Some(c) if c == b'_' || c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self
                    .src
                    .get(self.pos)
                    .is_some_and(|c| *c == b'_' || c.is_ascii_alphanumeric())
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos])
                    .expect("ascii")
                    .to_string();
                if let Some(ctx) = self.context {
                    if !ctx.contains(&name) {
                        return Err(ParseError::UnknownGenerator { pos: start, name });
                    }
                }
                Ok(WordExpr::Generator { name })
            }
            Some(_) => self.err("expected a generator, `1`, `(` or `[`"),
            None => self.err("unexpected end of input"),
        }
    }

    fn int(&mut self) -> Result<BigInt, ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.src.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        let digits = self.pos;
        while self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if self.pos == digits {
            return self.err("expected an integer");
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        Ok(BigInt::from_str(s).expect("digits"))
    }

    fn exponent(&mut self) -> Result<Exponent, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let n = self.int()?;
                if self.peek() == Some(b'/') {
                    self.pos += 1;
                    let dpos = {
                        self.skip_ws();
                        self.pos
                    };
                    let d = self.int()?;
                    if d.is_negative() {
                        return Err(ParseError::Syntax {
                            pos: dpos,
                            msg: "denominator must be positive".into(),
                        });
                    }
                    if d.is_zero() {
                        return Err(ParseError::ZeroDenominator { pos: dpos });
                    }
                    self.expect(b')')?;
                    let q = Rational::new(n, d).expect("nonzero denominator");
                    Ok(Exponent::from_rational(q))
                } else {
                    self.expect(b')')?;
                    Ok(Exponent::Integer(n))
                }
            }
            Some(b'Z') => {
                if !self.src[self.pos..].starts_with(b"Zp(") {
                    return self.err("expected `Zp(`");
                }
                self.pos += 3;
                let value = self.int()?;
                self.expect(b';')?;
                let kpos = {
                    self.skip_ws();
                    self.pos
                };
                let k = self.int()?;
                let precision = match u32::try_from(&k) {
                    Ok(k) if k > 0 => k,
                    _ => {
                        return Err(ParseError::Syntax {
                            pos: kpos,
                            msg: "precision must be a positive integer".into(),
                        })
                    }
                };
                self.expect(b')')?;
                Ok(Exponent::Padic { value, precision })
            }
            Some(c) if c == b'-' || c.is_ascii_digit() => Ok(Exponent::Integer(self.int()?)),
            _ => self.err("expected an exponent"),
        }
    }
}
