//! Sparse multivariate polynomials over an exact field.
//!
//! A [`Polynomial`] is a list of `(exponent vector, coefficient)` terms kept
//! strictly descending under the ring's [`TermOrder`], with no zero
//! coefficients. Polynomials are immutable values; every operation returns
//! a new polynomial.

mod codec;
mod text;

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use smallvec::SmallVec;

use crate::arith::{Field, FieldDescriptor};
use crate::error::{GbError, Result};

pub use text::{format_system, parse_system, RingDescriptor, System};

pub type Exp = u16;

/// Exponent vector of a monomial, with its total degree and a
/// support bitmask cached for fast divisibility rejection.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExpVec {
    exps: SmallVec<[Exp; 12]>,
    deg: u32,
    mask: u64,
}

impl ExpVec {
    pub fn new(exps: &[Exp]) -> Self {
        let mut deg = 0u32;
        let mut mask = 0u64;
        for (i, &e) in exps.iter().enumerate() {
            deg += e as u32;
            if e > 0 {
                mask |= 1 << (i % 64);
            }
        }
        ExpVec { exps: SmallVec::from_slice(exps), deg, mask }
    }

    pub fn zero(nvars: usize) -> Self {
        ExpVec { exps: SmallVec::from_elem(0, nvars), deg: 0, mask: 0 }
    }

    /// The exponent vector of the `i`-th variable.
    pub fn unit(nvars: usize, i: usize) -> Self {
        let mut v = vec![0; nvars];
        v[i] = 1;
        Self::new(&v)
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.deg
    }

    pub fn as_slice(&self) -> &[Exp] {
        &self.exps
    }

    pub fn is_zero(&self) -> bool {
        self.deg == 0
    }

    pub fn checked_add(&self, other: &ExpVec) -> Result<ExpVec> {
        let mut exps = SmallVec::with_capacity(self.len());
        for (a, b) in self.exps.iter().zip(&other.exps) {
            exps.push(a.checked_add(*b).ok_or(GbError::ExponentOverflow)?);
        }
        Ok(ExpVec { exps, deg: self.deg + other.deg, mask: self.mask | other.mask })
    }

    /// True if `self` divides `other`.
    #[inline]
    pub fn divides(&self, other: &ExpVec) -> bool {
        if self.mask & !other.mask != 0 || self.deg > other.deg {
            return false;
        }
        self.exps.iter().zip(&other.exps).all(|(a, b)| a <= b)
    }

    /// `other / self`, if `self` divides `other`.
    pub fn quotient_of(&self, other: &ExpVec) -> Option<ExpVec> {
        if !self.divides(other) {
            return None;
        }
        let exps: SmallVec<[Exp; 12]> =
            self.exps.iter().zip(&other.exps).map(|(a, b)| b - a).collect();
        Some(Self::new(&exps))
    }

    pub fn lcm(&self, other: &ExpVec) -> ExpVec {
        let exps: SmallVec<[Exp; 12]> =
            self.exps.iter().zip(&other.exps).map(|(a, b)| *a.max(b)).collect();
        Self::new(&exps)
    }

    /// No variable occurs in both monomials.
    pub fn is_coprime(&self, other: &ExpVec) -> bool {
        if self.mask & other.mask == 0 {
            return true;
        }
        self.exps.iter().zip(&other.exps).all(|(a, b)| *a == 0 || *b == 0)
    }
}

impl fmt::Debug for ExpVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.exps.as_slice())
    }
}

/// Admissible term orders. Variables are ordered `x0 > x1 > ... `.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum TermOrder {
    Lex,
    GradedLex,
    #[default]
    GradedRevLex,
}

impl TermOrder {
    #[inline]
    pub fn cmp(&self, a: &ExpVec, b: &ExpVec) -> Ordering {
        match self {
            TermOrder::Lex => a.exps.cmp(&b.exps),
            TermOrder::GradedLex => a.deg.cmp(&b.deg).then_with(|| a.exps.cmp(&b.exps)),
            TermOrder::GradedRevLex => a.deg.cmp(&b.deg).then_with(|| {
                for (x, y) in a.exps.iter().zip(&b.exps).rev() {
                    if x != y {
                        return y.cmp(x);
                    }
                }
                Ordering::Equal
            }),
        }
    }

    /// A key whose lexicographic order agrees with this term order, for use
    /// in ordered collections.
    pub fn sort_key(&self, e: &ExpVec) -> SmallVec<[i32; 13]> {
        let mut key = SmallVec::new();
        match self {
            TermOrder::Lex => key.extend(e.exps.iter().map(|&x| x as i32)),
            TermOrder::GradedLex => {
                key.push(e.deg as i32);
                key.extend(e.exps.iter().map(|&x| x as i32));
            }
            TermOrder::GradedRevLex => {
                key.push(e.deg as i32);
                key.extend(e.exps.iter().rev().map(|&x| -(x as i32)));
            }
        }
        key
    }

    pub fn name(&self) -> &'static str {
        match self {
            TermOrder::Lex => "lex",
            TermOrder::GradedLex => "grlex",
            TermOrder::GradedRevLex => "grevlex",
        }
    }
}

impl std::str::FromStr for TermOrder {
    type Err = GbError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "lex" => Ok(TermOrder::Lex),
            "grlex" | "deglex" => Ok(TermOrder::GradedLex),
            "grevlex" | "degrevlex" => Ok(TermOrder::GradedRevLex),
            other => Err(GbError::Config(format!("unknown term order `{}`", other))),
        }
    }
}

/// Ring context shared by all polynomials of one computation.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyRing<F: Field> {
    vars: Vec<String>,
    field: F,
    order: TermOrder,
}

impl<F: Field> PolyRing<F> {
    pub fn new(vars: Vec<String>, field: F, order: TermOrder) -> Result<Arc<Self>> {
        if vars.is_empty() {
            return Err(GbError::Config("a ring needs at least one variable".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for v in &vars {
            let ok = v.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && v.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !ok {
                return Err(GbError::Config(format!("invalid variable name `{}`", v)));
            }
            if !seen.insert(v.as_str()) {
                return Err(GbError::Config(format!("duplicate variable `{}`", v)));
            }
        }
        Ok(Arc::new(PolyRing { vars, field, order }))
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn order(&self) -> TermOrder {
        self.order
    }

    pub fn descriptor(&self) -> RingDescriptor {
        RingDescriptor {
            vars: self.vars.clone(),
            field: self.field.descriptor(),
            order: self.order,
        }
    }

    pub fn field_descriptor(&self) -> FieldDescriptor {
        self.field.descriptor()
    }
}

pub type Term<F> = (ExpVec, <F as Field>::Elem);

/// A sparse polynomial; terms strictly descending, no zero coefficients.
#[derive(Clone)]
pub struct Polynomial<F: Field> {
    ring: Arc<PolyRing<F>>,
    terms: Vec<Term<F>>,
}

impl<F: Field> PartialEq for Polynomial<F> {
    fn eq(&self, other: &Self) -> bool {
        self.same_ring(other) && self.terms == other.terms
    }
}

impl<F: Field> Eq for Polynomial<F> {}

impl<F: Field> AsRef<Polynomial<F>> for Polynomial<F> {
    fn as_ref(&self) -> &Polynomial<F> {
        self
    }
}

impl<F: Field> Polynomial<F> {
    pub fn zero(ring: &Arc<PolyRing<F>>) -> Self {
        Polynomial { ring: ring.clone(), terms: Vec::new() }
    }

    pub fn constant(ring: &Arc<PolyRing<F>>, c: F::Elem) -> Self {
        Self::monomial(ring, ExpVec::zero(ring.nvars()), c)
    }

    pub fn one(ring: &Arc<PolyRing<F>>) -> Self {
        Self::constant(ring, ring.field.one())
    }

    pub fn monomial(ring: &Arc<PolyRing<F>>, e: ExpVec, c: F::Elem) -> Self {
        let terms = if ring.field.is_zero(&c) { Vec::new() } else { vec![(e, c)] };
        Polynomial { ring: ring.clone(), terms }
    }

    /// The `i`-th ring variable.
    pub fn var(ring: &Arc<PolyRing<F>>, i: usize) -> Self {
        Self::monomial(ring, ExpVec::unit(ring.nvars(), i), ring.field.one())
    }

    /// Builds a polynomial from terms in any order; like terms are combined
    /// and zeros dropped.
    pub fn from_terms(ring: &Arc<PolyRing<F>>, mut terms: Vec<Term<F>>) -> Result<Self> {
        if terms.iter().any(|(e, _)| e.len() != ring.nvars()) {
            return Err(GbError::Config("exponent vector length does not match ring".into()));
        }
        let order = ring.order;
        terms.sort_by(|a, b| order.cmp(&b.0, &a.0));
        let field = &ring.field;
        let mut out: Vec<Term<F>> = Vec::with_capacity(terms.len());
        for (e, c) in terms {
            match out.last_mut() {
                Some((le, lc)) if *le == e => *lc = field.add(lc, &c),
                _ => out.push((e, c)),
            }
        }
        out.retain(|(_, c)| !field.is_zero(c));
        Ok(Polynomial { ring: ring.clone(), terms: out })
    }

    /// Wraps terms that are already sorted and zero-free.
    pub(crate) fn from_sorted(ring: Arc<PolyRing<F>>, terms: Vec<Term<F>>) -> Self {
        debug_assert!(terms.windows(2).all(|w| ring.order.cmp(&w[0].0, &w[1].0).is_gt()));
        debug_assert!(terms.iter().all(|(_, c)| !ring.field.is_zero(c)));
        Polynomial { ring, terms }
    }

    pub fn ring(&self) -> &Arc<PolyRing<F>> {
        &self.ring
    }

    pub fn field(&self) -> &F {
        &self.ring.field
    }

    pub fn terms(&self) -> &[Term<F>] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<Term<F>> {
        self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.is_constant() && self.ring.field.is_one(&self.terms[0].1)
    }

    pub fn same_ring(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.ring, &other.ring) || *self.ring == *other.ring
    }

    pub fn check_ring(&self, other: &Self) -> Result<()> {
        if self.same_ring(other) {
            Ok(())
        } else {
            Err(GbError::RingMismatch)
        }
    }

    /// The order-maximal term, or `None` for the zero polynomial.
    pub fn leading(&self) -> Option<(&ExpVec, &F::Elem)> {
        self.terms.first().map(|(e, c)| (e, c))
    }

    pub fn lead_exp(&self) -> Option<&ExpVec> {
        self.terms.first().map(|(e, _)| e)
    }

    pub fn lead_coeff(&self) -> Option<&F::Elem> {
        self.terms.first().map(|(_, c)| c)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(|(e, _)| e.degree()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_ring(other)?;
        let one = self.ring.field.one();
        self.axpy(&one, None, other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_ring(other)?;
        let minus_one = self.ring.field.neg(&self.ring.field.one());
        self.axpy(&minus_one, None, other)
    }

    pub fn neg(&self) -> Self {
        let field = &self.ring.field;
        let terms = self.terms.iter().map(|(e, c)| (e.clone(), field.neg(c))).collect();
        Polynomial { ring: self.ring.clone(), terms }
    }

    pub fn scale(&self, c: &F::Elem) -> Self {
        let field = &self.ring.field;
        if field.is_zero(c) {
            return Self::zero(&self.ring);
        }
        let terms = self.terms.iter().map(|(e, a)| (e.clone(), field.mul(a, c))).collect();
        Polynomial { ring: self.ring.clone(), terms }
    }

    /// `c * x^e * self`.
    pub fn mul_term(&self, e: &ExpVec, c: &F::Elem) -> Result<Self> {
        let field = &self.ring.field;
        if field.is_zero(c) {
            return Ok(Self::zero(&self.ring));
        }
        let mut terms = Vec::with_capacity(self.terms.len());
        for (te, tc) in &self.terms {
            terms.push((te.checked_add(e)?, field.mul(tc, c)));
        }
        Ok(Polynomial { ring: self.ring.clone(), terms })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_ring(other)?;
        let mut acc = Self::zero(&self.ring);
        for (e, c) in &other.terms {
            acc = acc.axpy(c, Some(e), self)?;
        }
        Ok(acc)
    }

    pub fn pow(&self, k: u32) -> Result<Self> {
        let mut acc = Self::one(&self.ring);
        for _ in 0..k {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// `self + c * x^shift * other`, merging two sorted term lists.
    pub fn axpy(&self, c: &F::Elem, shift: Option<&ExpVec>, other: &Self) -> Result<Self> {
        let terms = merge_axpy(&self.ring, &self.terms, c, shift, &other.terms)?;
        Ok(Polynomial { ring: self.ring.clone(), terms })
    }

    /// Divides by the leading coefficient. The zero polynomial is returned
    /// unchanged.
    pub fn make_monic(&self) -> Self {
        match self.lead_coeff() {
            None => self.clone(),
            Some(lc) if self.ring.field.is_one(lc) => self.clone(),
            Some(lc) => {
                let inv = self.ring.field.inv(lc).expect("leading coefficient is nonzero");
                self.scale(&inv)
            }
        }
    }

    /// The S-polynomial with both cofactors scaled to leading coefficient
    /// one: `(L/lt(p))·p/lc(p) − (L/lt(q))·q/lc(q)` with `L = lcm(lt(p), lt(q))`.
    pub fn s_polynomial(&self, other: &Self) -> Result<Self> {
        self.check_ring(other)?;
        let (ep, cp) = self.leading().ok_or(GbError::Precondition("S-polynomial of zero"))?;
        let (eq, cq) = other.leading().ok_or(GbError::Precondition("S-polynomial of zero"))?;
        let field = &self.ring.field;
        let lcm = ep.lcm(eq);
        let up = ep.quotient_of(&lcm).expect("lcm is a multiple");
        let uq = eq.quotient_of(&lcm).expect("lcm is a multiple");
        let ip = field.inv(cp)?;
        let iq = field.neg(&field.inv(cq)?);
        // Both shifted heads equal the lcm with coefficient one and cancel.
        let left: Vec<Term<F>> = self.terms[1..]
            .iter()
            .map(|(e, c)| Ok((e.checked_add(&up)?, field.mul(c, &ip))))
            .collect::<Result<_>>()?;
        let terms = merge_axpy(&self.ring, &left, &iq, Some(&uq), &other.terms[1..])?;
        Ok(Polynomial { ring: self.ring.clone(), terms })
    }

    pub fn encode(&self) -> Vec<u8> {
        codec::encode(self)
    }

    pub fn decode(ring: &Arc<PolyRing<F>>, bytes: &[u8]) -> Result<Self> {
        codec::decode(ring, bytes)
    }

    pub fn parse(ring: &Arc<PolyRing<F>>, s: &str) -> Result<Self> {
        text::parse_polynomial(ring, s, 1)
    }
}

pub(crate) fn merge_axpy<F: Field>(
    ring: &Arc<PolyRing<F>>,
    a: &[Term<F>],
    c: &F::Elem,
    shift: Option<&ExpVec>,
    b: &[Term<F>],
) -> Result<Vec<Term<F>>> {
    let field = &ring.field;
    let order = ring.order;
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut ai = a.iter().peekable();
    let mut bi = b.iter();
    let mut next_b = || -> Result<Option<Term<F>>> {
        match bi.next() {
            None => Ok(None),
            Some((e, bc)) => {
                let e = match shift {
                    Some(s) => e.checked_add(s)?,
                    None => e.clone(),
                };
                Ok(Some((e, field.mul(bc, c))))
            }
        }
    };
    let mut cur_b = next_b()?;
    while let Some((be, bc)) = cur_b.take() {
        loop {
            match ai.peek() {
                Some((ae, _)) if order.cmp(ae, &be) == Ordering::Greater => {
                    out.push(ai.next().unwrap().clone());
                }
                _ => break,
            }
        }
        match ai.peek() {
            Some((ae, ac)) if *ae == be => {
                let s = field.add(ac, &bc);
                if !field.is_zero(&s) {
                    out.push((be, s));
                }
                ai.next();
            }
            _ => out.push((be, bc)),
        }
        cur_b = next_b()?;
    }
    out.extend(ai.cloned());
    Ok(out)
}

impl<F: Field> fmt::Display for Polynomial<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        text::write_polynomial(self, f)
    }
}

impl<F: Field> fmt::Debug for Polynomial<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial({})", self)
    }
}
