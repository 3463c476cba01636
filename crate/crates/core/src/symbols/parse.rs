//! Mini-language for command-line operators and symbols.
//!
//! Accepted inputs are polynomials with rational coefficients in a single
//! variable: `n` for operators (`n*(n-1)/2`) or `|z|^2` for radial symbols
//! (`1/2*|z|^4 - |z|^2 + 3/8`). Explicit coefficient lists use
//! `j,k:c; j,k:c` for `sum c zbar^j z^k` or `sum c (b†)^j b^k`.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::{NormalPoly, PhaseSymbol, Rational, SymbolKind};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Variable {
    Number,
    AbsZ,
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(Rational),
    N,
    AbsZ,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn err(column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        column,
        message: message.into(),
    }
}

/// Exact rational from `3`, `-3/8`, `0.125` or `1e-3`-free decimal text.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    if let Some((n, d)) = t.split_once('/') {
        let n = parse_rational(n)?;
        let d = parse_rational(d)?;
        if d.is_zero() {
            return Err(err(1, "division by zero"));
        }
        return Ok(n / d);
    }
    let (negative, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    let digits_ok = |s: &str| s.chars().all(|c| c.is_ascii_digit());
    if (int_part.is_empty() && frac_part.is_empty()) || !digits_ok(int_part) || !digits_ok(frac_part) {
        return Err(err(1, format!("'{text}' is not a rational number")));
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits
        .parse()
        .map_err(|_| err(1, format!("'{text}' is not a rational number")))?;
    let denom = num_traits::pow(BigInt::from(10), frac_part.len());
    let value = Rational::new(numer, denom);
    Ok(if negative { -value } else { value })
}

fn tokenize(src: &str, var: Variable) -> Result<Vec<(usize, Token)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            ' ' | '\t' => {
                i += 1;
            }
            '+' => {
                out.push((col, Token::Plus));
                i += 1;
            }
            '-' => {
                out.push((col, Token::Minus));
                i += 1;
            }
            '*' => {
                out.push((col, Token::Star));
                i += 1;
            }
            '/' => {
                out.push((col, Token::Slash));
                i += 1;
            }
            '^' => {
                out.push((col, Token::Caret));
                i += 1;
            }
            '(' => {
                out.push((col, Token::LParen));
                i += 1;
            }
            ')' => {
                out.push((col, Token::RParen));
                i += 1;
            }
            'n' if var == Variable::Number => {
                out.push((col, Token::N));
                i += 1;
            }
            '|' if var == Variable::AbsZ => {
                if chars.get(i + 1) == Some(&'z') && chars.get(i + 2) == Some(&'|') {
                    out.push((col, Token::AbsZ));
                    i += 3;
                } else {
                    return Err(err(col, "expected '|z|'"));
                }
            }
            d if d.is_ascii_digit() || d == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let value = parse_rational(&text).map_err(|_| err(col, format!("bad number '{text}'")))?;
                out.push((col, Token::Num(value)));
            }
            other => {
                let expected = match var {
                    Variable::Number => "operators are polynomials in n",
                    Variable::AbsZ => "symbols are polynomials in |z|^2",
                };
                return Err(err(col, format!("unexpected character '{other}' ({expected})")));
            }
        }
    }
    Ok(out)
}

/// Dense univariate polynomial, index = power of the variable.
#[derive(Clone, Debug, PartialEq)]
struct Univariate(Vec<Rational>);

impl Univariate {
    fn constant(c: Rational) -> Self {
        Self(vec![c]).trimmed()
    }

    fn variable() -> Self {
        Self(vec![Rational::zero(), Rational::one()])
    }

    fn trimmed(mut self) -> Self {
        while self.0.last().is_some_and(|c| c.is_zero()) {
            self.0.pop();
        }
        self
    }

    fn as_constant(&self) -> Option<Rational> {
        match self.0.len() {
            0 => Some(Rational::zero()),
            1 => Some(self.0[0].clone()),
            _ => None,
        }
    }

    fn add(&self, other: &Self) -> Self {
        let len = self.0.len().max(other.0.len());
        let zero = Rational::zero();
        Self(
            (0..len)
                .map(|i| self.0.get(i).unwrap_or(&zero) + other.0.get(i).unwrap_or(&zero))
                .collect(),
        )
        .trimmed()
    }

    fn neg(&self) -> Self {
        Self(self.0.iter().map(|c| -c).collect())
    }

    fn mul(&self, other: &Self) -> Self {
        if self.0.is_empty() || other.0.is_empty() {
            return Self(Vec::new());
        }
        let mut out = vec![Rational::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self(out).trimmed()
    }

    fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::constant(Rational::one()), |acc, _| acc.mul(self))
    }
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end_column: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn column(&self) -> usize {
        self.tokens.get(self.pos).map(|(c, _)| *c).unwrap_or(self.end_column)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Univariate> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.next();
                    acc = acc.add(&self.term()?);
                }
                Some(Token::Minus) => {
                    self.next();
                    acc = acc.add(&self.term()?.neg());
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Univariate> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.next();
                    acc = acc.mul(&self.unary()?);
                }
                Some(Token::Slash) => {
                    self.next();
                    let col = self.column();
                    let divisor = self.unary()?;
                    let c = divisor
                        .as_constant()
                        .ok_or_else(|| err(col, "division is only allowed by a constant"))?;
                    if c.is_zero() {
                        return Err(err(col, "division by zero"));
                    }
                    acc = acc.mul(&Univariate::constant(c.recip()));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Univariate> {
        match self.peek() {
            Some(Token::Minus) => {
                self.next();
                Ok(self.unary()?.neg())
            }
            Some(Token::Plus) => {
                self.next();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn exponent(&mut self) -> Result<u32> {
        let col = self.column();
        match self.next() {
            Some(Token::Num(e)) if e.is_integer() && e >= Rational::zero() => {
                u32::try_from(e.to_integer()).map_err(|_| err(col, "exponent too large"))
            }
            _ => Err(err(col, "expected a non-negative integer exponent")),
        }
    }

    fn power(&mut self) -> Result<Univariate> {
        let col = self.column();
        let base = match self.next() {
            Some(Token::Num(c)) => Univariate::constant(c),
            Some(Token::N) => Univariate::variable(),
            Some(Token::AbsZ) => {
                if self.peek() != Some(&Token::Caret) {
                    return Err(err(col, "|z| must carry an even power, e.g. |z|^2"));
                }
                self.next();
                let ecol = self.column();
                let e = self.exponent()?;
                if e % 2 != 0 {
                    return Err(err(ecol, "|z| must carry an even power"));
                }
                return Ok(Univariate::variable().pow(e / 2));
            }
            Some(Token::LParen) => {
                let inner = self.expr()?;
                if self.next() != Some(Token::RParen) {
                    return Err(err(col, "unbalanced parenthesis"));
                }
                inner
            }
            Some(_) => return Err(err(col, "unexpected token")),
            None => return Err(err(col, "unexpected end of input")),
        };
        if self.peek() == Some(&Token::Caret) {
            self.next();
            let e = self.exponent()?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }
}

fn parse_univariate(src: &str, var: Variable) -> Result<Univariate> {
    let tokens = tokenize(src, var)?;
    if tokens.is_empty() {
        return Err(err(1, "empty expression"));
    }
    let mut parser = Parser {
        tokens,
        pos: 0,
        end_column: src.chars().count() + 1,
    };
    let poly = parser.expr()?;
    if parser.pos < parser.tokens.len() {
        return Err(err(parser.column(), "trailing input"));
    }
    Ok(poly)
}

/// Polynomial in `n = b†b`, normal ordered.
pub fn parse_operator(src: &str) -> Result<NormalPoly> {
    let poly = parse_univariate(src, Variable::Number)?;
    let n = NormalPoly::number();
    let mut out = NormalPoly::zero();
    for (k, c) in poly.0.iter().enumerate() {
        out = &out + &n.pow(k as u32).scale(c);
    }
    Ok(out)
}

/// Polynomial in `|z|^2` with the given kind tag.
pub fn parse_radial_symbol(src: &str, kind: SymbolKind) -> Result<PhaseSymbol> {
    let poly = parse_univariate(src, Variable::AbsZ)?;
    Ok(PhaseSymbol::radial(kind, &poly.0))
}

/// `j,k:c; j,k:c` lists.
pub fn parse_coefficient_list(src: &str) -> Result<Vec<((u32, u32), Rational)>> {
    let mut out = Vec::new();
    let mut column = 1;
    for entry in src.split(';') {
        let trimmed = entry.trim();
        if !trimmed.is_empty() {
            let (idx, value) = trimmed
                .split_once(':')
                .ok_or_else(|| err(column, format!("expected 'j,k:c', got '{trimmed}'")))?;
            let (j, k) = idx
                .split_once(',')
                .ok_or_else(|| err(column, format!("expected 'j,k' before ':', got '{idx}'")))?;
            let j: u32 = j.trim().parse().map_err(|_| err(column, format!("bad index '{j}'")))?;
            let k: u32 = k.trim().parse().map_err(|_| err(column, format!("bad index '{k}'")))?;
            let c = parse_rational(value).map_err(|_| err(column, format!("bad coefficient '{value}'")))?;
            out.push(((j, k), c));
        }
        column += entry.chars().count() + 1;
    }
    if out.is_empty() {
        return Err(err(1, "empty coefficient list"));
    }
    Ok(out)
}
