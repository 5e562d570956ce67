//! Plain-text polynomial systems.
//!
//! ```text
//! # comment
//! vars: x, y, z
//! field: Zp 2^127-1
//! order: grevlex
//! x^2 + 3/2*x*y - z
//! y z - 1
//! ```
//!
//! Header lines may appear in any order before the first polynomial;
//! `field` defaults to `Q` and `order` to `grevlex`. Multiplication may be
//! written with `*` or by juxtaposition, and parentheses are allowed.

use std::fmt;
use std::sync::Arc;

use crate::arith::{parse_modulus, Field, FieldDescriptor};
use crate::error::{GbError, Result};

use super::{ExpVec, PolyRing, Polynomial, TermOrder};

/// Field-independent description of a polynomial ring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingDescriptor {
    pub vars: Vec<String>,
    pub field: FieldDescriptor,
    pub order: TermOrder,
}

impl RingDescriptor {
    pub fn build<F: Field>(&self, field: F) -> Result<Arc<PolyRing<F>>> {
        if field.descriptor() != self.field {
            return Err(GbError::Config("field does not match ring descriptor".into()));
        }
        PolyRing::new(self.vars.clone(), field, self.order)
    }

    /// The three header lines of the text format.
    pub fn to_header(&self) -> String {
        format!(
            "vars: {}\nfield: {}\norder: {}\n",
            self.vars.join(", "),
            self.field,
            self.order.name()
        )
    }

    pub fn from_header(text: &str) -> Result<Self> {
        let (desc, body) = split_header(text)?;
        if let Some((line, _)) = body.first() {
            return Err(GbError::parse(*line, "unexpected polynomial in ring header"));
        }
        Ok(desc)
    }
}

/// A parsed input file: ring description plus the polynomial lines, still
/// as text, so that the caller can pick the concrete field type.
#[derive(Clone, Debug)]
pub struct System {
    pub ring: RingDescriptor,
    lines: Vec<(usize, String)>,
}

impl System {
    pub fn new(ring: RingDescriptor, lines: Vec<String>) -> Self {
        System { ring, lines: lines.into_iter().enumerate().map(|(i, l)| (i + 1, l)).collect() }
    }

    pub fn lines(&self) -> impl Iterator<Item = &str> {
        self.lines.iter().map(|(_, l)| l.as_str())
    }

    /// Header plus polynomial lines, readable by [`parse_system`].
    pub fn to_text(&self) -> String {
        let mut out = self.ring.to_header();
        for (_, l) in &self.lines {
            out.push_str(l);
            out.push('\n');
        }
        out
    }

    pub fn polynomials<F: Field>(&self, ring: &Arc<PolyRing<F>>) -> Result<Vec<Polynomial<F>>> {
        self.lines.iter().map(|(no, s)| parse_polynomial(ring, s, *no)).collect()
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }
}

pub fn parse_system(text: &str) -> Result<System> {
    let (ring, lines) = split_header(text)?;
    Ok(System { ring, lines })
}

fn split_header(text: &str) -> Result<(RingDescriptor, Vec<(usize, String)>)> {
    let mut vars = None;
    let mut field = FieldDescriptor::Rational;
    let mut order = TermOrder::GradedRevLex;
    let mut body = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let header = line.split_once(':').filter(|(k, _)| body.is_empty() && is_key(k.trim()));
        match header {
            Some((key, value)) => {
                let value = value.trim();
                match key.trim() {
                    "vars" => {
                        vars = Some(
                            value
                                .split([',', ' '])
                                .filter(|s| !s.is_empty())
                                .map(str::to_string)
                                .collect::<Vec<_>>(),
                        )
                    }
                    "field" => field = parse_field(value).map_err(|e| GbError::parse(no, e.to_string()))?,
                    "order" => order = value.parse().map_err(|e: GbError| GbError::parse(no, e.to_string()))?,
                    _ => unreachable!(),
                }
            }
            None => body.push((no, line.to_string())),
        }
    }
    let vars = vars.ok_or_else(|| GbError::parse(1, "missing `vars:` header"))?;
    Ok((RingDescriptor { vars, field, order }, body))
}

fn is_key(k: &str) -> bool {
    matches!(k, "vars" | "field" | "order")
}

fn parse_field(s: &str) -> Result<FieldDescriptor> {
    let mut it = s.split_whitespace();
    match it.next() {
        Some("Q") => Ok(FieldDescriptor::Rational),
        Some("Zp") => {
            let m: String = it.collect();
            if m.is_empty() {
                return Err(GbError::Config("`Zp` needs a modulus".into()));
            }
            Ok(FieldDescriptor::Modular(parse_modulus(&m)?))
        }
        _ => Err(GbError::Config(format!("unknown field `{}`", s))),
    }
}

/// Header plus one polynomial per line.
pub fn format_system<F: Field>(ring: &PolyRing<F>, polys: &[Polynomial<F>]) -> String {
    let mut out = ring.descriptor().to_header();
    for p in polys {
        out.push_str(&p.to_string());
        out.push('\n');
    }
    out
}

pub(super) fn write_polynomial<F: Field>(p: &Polynomial<F>, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if p.is_zero() {
        return write!(f, "0");
    }
    let field = p.field();
    let vars = p.ring().vars();
    for (k, (e, c)) in p.terms().iter().enumerate() {
        let negative = field.is_negative(c);
        let mag = if negative { field.neg(c) } else { c.clone() };
        match (k, negative) {
            (0, true) => write!(f, "-")?,
            (0, false) => {}
            (_, true) => write!(f, " - ")?,
            (_, false) => write!(f, " + ")?,
        }
        let mut first = true;
        if !field.is_one(&mag) || e.is_zero() {
            write!(f, "{}", field.format(&mag))?;
            first = false;
        }
        for (v, &x) in vars.iter().zip(e.as_slice()) {
            if x == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if x == 1 {
                write!(f, "{}", v)?;
            } else {
                write!(f, "{}^{}", v, x)?;
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn tokenize(s: &str, line: usize) -> Result<Vec<Tok>> {
    let chars: Vec<char> = s.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            toks.push(t);
            i += 1;
            continue;
        }
        match c {
            ' ' | '\t' | '\r' => i += 1,
            d if d.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i + 1 < chars.len() && chars[i] == '/' && chars[i + 1].is_ascii_digit() {
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                toks.push(Tok::Num(chars[start..i].iter().collect()));
            }
            a if a.is_ascii_alphabetic() || a == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                toks.push(Tok::Ident(chars[start..i].iter().collect()));
            }
            other => return Err(GbError::parse(line, format!("unexpected character `{}`", other))),
        }
    }
    Ok(toks)
}

struct Parser<'a, F: Field> {
    ring: &'a Arc<PolyRing<F>>,
    toks: Vec<Tok>,
    pos: usize,
    line: usize,
}

impl<F: Field> Parser<'_, F> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn err(&self, msg: impl Into<String>) -> GbError {
        GbError::parse(self.line, msg)
    }

    fn expr(&mut self) -> Result<Polynomial<F>> {
        let mut acc = Polynomial::zero(self.ring);
        let mut negate = false;
        match self.peek() {
            Some(Tok::Minus) => {
                negate = true;
                self.pos += 1;
            }
            Some(Tok::Plus) => self.pos += 1,
            _ => {}
        }
        loop {
            let t = self.term()?;
            acc = if negate { acc.sub(&t)? } else { acc.add(&t)? };
            match self.peek() {
                Some(Tok::Plus) => negate = false,
                Some(Tok::Minus) => negate = true,
                _ => return Ok(acc),
            }
            self.pos += 1;
        }
    }

    fn term(&mut self) -> Result<Polynomial<F>> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = acc.mul(&self.factor()?)?;
                }
                Some(Tok::Num(_) | Tok::Ident(_) | Tok::LParen) => acc = acc.mul(&self.factor()?)?,
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Polynomial<F>> {
        let base = self.primary()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            match self.toks.get(self.pos).cloned() {
                Some(Tok::Num(n)) if !n.contains('/') => {
                    self.pos += 1;
                    let k: u32 = n.parse().map_err(|_| self.err("exponent too large"))?;
                    if let (Some((e, c)), 1) = (base.leading(), base.len()) {
                        let mut exps = e.as_slice().to_vec();
                        for x in &mut exps {
                            let v = (*x as u64) * k as u64;
                            *x = u16::try_from(v).map_err(|_| GbError::ExponentOverflow)?;
                        }
                        let field = self.ring.field();
                        let mut coeff = field.one();
                        for _ in 0..k {
                            coeff = field.mul(&coeff, c);
                        }
                        return Ok(Polynomial::monomial(self.ring, ExpVec::new(&exps), coeff));
                    }
                    base.pow(k)
                }
                _ => Err(self.err("expected an integer exponent after `^`")),
            }
        } else {
            Ok(base)
        }
    }

    fn primary(&mut self) -> Result<Polynomial<F>> {
        let tok = self.toks.get(self.pos).cloned();
        self.pos += 1;
        match tok {
            Some(Tok::Num(n)) => {
                let c = self.ring.field().parse(&n).map_err(|e| self.err(e.to_string()))?;
                Ok(Polynomial::constant(self.ring, c))
            }
            Some(Tok::Ident(name)) => {
                let i = self
                    .ring
                    .vars()
                    .iter()
                    .position(|v| *v == name)
                    .ok_or_else(|| self.err(format!("unknown variable `{}`", name)))?;
                Ok(Polynomial::var(self.ring, i))
            }
            Some(Tok::LParen) => {
                let e = self.expr()?;
                if self.toks.get(self.pos) != Some(&Tok::RParen) {
                    return Err(self.err("missing `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(Tok::Minus) => Ok(self.factor()?.neg()),
            other => Err(self.err(format!("unexpected token {:?}", other))),
        }
    }
}

pub(super) fn parse_polynomial<F: Field>(
    ring: &Arc<PolyRing<F>>,
    s: &str,
    line: usize,
) -> Result<Polynomial<F>> {
    let toks = tokenize(s, line)?;
    if toks.is_empty() {
        return Err(GbError::parse(line, "empty polynomial"));
    }
    let mut parser = Parser { ring, toks, pos: 0, line };
    let p = parser.expr()?;
    if parser.pos != parser.toks.len() {
        return Err(parser.err(format!("trailing input at token {:?}", parser.toks[parser.pos])));
    }
    Ok(p)
}
