//! A deliberately naive Buchberger implementation used as an independent
//! oracle: its own polynomial type (exponent `Vec` to coefficient), its own
//! term-order comparison, all pairs, no criteria, no shared code with the
//! engine apart from the conversion at the boundary.

#![allow(dead_code)]

use std::cmp::Ordering;
use std::fmt::Debug;

use gb_core::{Field, ModularField, PolyRing, Polynomial, RationalField, TermOrder};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rug::Integer;

pub trait Coeff: Clone + PartialEq + Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn inv(&self) -> Self;
}

impl Coeff for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn inv(&self) -> Self {
        self.recip()
    }
}

pub const SMALL_P: u64 = 32003;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Fp(pub u64);

impl Coeff for Fp {
    fn zero() -> Self {
        Fp(0)
    }
    fn one() -> Self {
        Fp(1)
    }
    fn is_zero(&self) -> bool {
        self.0 == 0
    }
    fn add(&self, o: &Self) -> Self {
        Fp((self.0 + o.0) % SMALL_P)
    }
    fn mul(&self, o: &Self) -> Self {
        Fp(self.0 * o.0 % SMALL_P)
    }
    fn neg(&self) -> Self {
        Fp((SMALL_P - self.0) % SMALL_P)
    }
    fn inv(&self) -> Self {
        // brute force
        Fp((1..SMALL_P).find(|k| k * self.0 % SMALL_P == 1).expect("nonzero"))
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Ord3 {
    Lex,
    GrLex,
    GrevLex,
}

impl Ord3 {
    pub fn of(o: TermOrder) -> Self {
        match o {
            TermOrder::Lex => Ord3::Lex,
            TermOrder::GradedLex => Ord3::GrLex,
            TermOrder::GradedRevLex => Ord3::GrevLex,
        }
    }

    pub fn cmp(self, a: &[u32], b: &[u32]) -> Ordering {
        let da: u32 = a.iter().sum();
        let db: u32 = b.iter().sum();
        match self {
            Ord3::Lex => a.cmp(b),
            Ord3::GrLex => da.cmp(&db).then_with(|| a.cmp(b)),
            Ord3::GrevLex => da.cmp(&db).then_with(|| {
                for k in (0..a.len()).rev() {
                    if a[k] != b[k] {
                        return b[k].cmp(&a[k]);
                    }
                }
                Ordering::Equal
            }),
        }
    }
}

/// Terms sorted strictly descending, no zero coefficients.
#[derive(Clone, PartialEq, Debug)]
pub struct NPoly<C> {
    pub terms: Vec<(Vec<u32>, C)>,
}

impl<C: Coeff> NPoly<C> {
    pub fn from_unsorted(ord: Ord3, raw: Vec<(Vec<u32>, C)>) -> Self {
        let mut terms: Vec<(Vec<u32>, C)> = Vec::new();
        for (m, c) in raw {
            match terms.iter_mut().find(|(n, _)| *n == m) {
                Some((_, d)) => *d = d.add(&c),
                None => terms.push((m, c)),
            }
        }
        terms.retain(|(_, c)| !c.is_zero());
        terms.sort_by(|a, b| ord.cmp(&b.0, &a.0));
        NPoly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add(&self, o: &Self, ord: Ord3) -> Self {
        let mut all = self.terms.clone();
        all.extend(o.terms.iter().cloned());
        Self::from_unsorted(ord, all)
    }

    fn scale_shift(&self, c: &C, m: &[u32], ord: Ord3) -> Self {
        let raw = self
            .terms
            .iter()
            .map(|(e, d)| (e.iter().zip(m).map(|(a, b)| a + b).collect(), d.mul(c)))
            .collect();
        Self::from_unsorted(ord, raw)
    }

    fn monic(&self, ord: Ord3) -> Self {
        let inv = self.terms[0].1.inv();
        self.scale_shift(&inv, &vec![0; self.terms[0].0.len()], ord)
    }
}

fn divides(a: &[u32], b: &[u32]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// Full normal form, divisor chosen as the first in the list.
pub fn nf<C: Coeff>(p: &NPoly<C>, g: &[NPoly<C>], ord: Ord3) -> NPoly<C> {
    let mut p = p.clone();
    let mut rem: Vec<(Vec<u32>, C)> = Vec::new();
    while let Some((e, c)) = p.terms.first().cloned() {
        match g.iter().find(|q| divides(&q.terms[0].0, &e)) {
            Some(q) => {
                let (qe, qc) = &q.terms[0];
                let m: Vec<u32> = e.iter().zip(qe).map(|(a, b)| a - b).collect();
                let f = c.mul(&qc.inv()).neg();
                p = p.add(&q.scale_shift(&f, &m, ord), ord);
            }
            None => {
                rem.push((e, c));
                p.terms.remove(0);
            }
        }
    }
    NPoly { terms: rem }
}

pub fn spoly<C: Coeff>(a: &NPoly<C>, b: &NPoly<C>, ord: Ord3) -> NPoly<C> {
    let (ea, ca) = &a.terms[0];
    let (eb, cb) = &b.terms[0];
    let l: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| *x.max(y)).collect();
    let ma: Vec<u32> = l.iter().zip(ea).map(|(x, y)| x - y).collect();
    let mb: Vec<u32> = l.iter().zip(eb).map(|(x, y)| x - y).collect();
    let left = a.scale_shift(&ca.inv(), &ma, ord);
    let right = b.scale_shift(&cb.inv().neg(), &mb, ord);
    left.add(&right, ord)
}

/// Reduced Gröbner basis, sorted by descending head term.
pub fn naive_reduced_gb<C: Coeff>(gens: &[NPoly<C>], ord: Ord3) -> Vec<NPoly<C>> {
    let mut g: Vec<NPoly<C>> = gens.iter().filter(|p| !p.is_zero()).cloned().collect();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for j in 0..g.len() {
        for i in 0..j {
            pairs.push((i, j));
        }
    }
    while let Some((i, j)) = pairs.pop() {
        let r = nf(&spoly(&g[i], &g[j], ord), &g, ord);
        if !r.is_zero() {
            let k = g.len();
            g.push(r);
            for i in 0..k {
                pairs.push((i, k));
            }
        }
    }
    // minimalize
    let mut min: Vec<NPoly<C>> = Vec::new();
    for (i, p) in g.iter().enumerate() {
        let h = &p.terms[0].0;
        let dominated = g.iter().enumerate().any(|(k, q)| {
            let hq = &q.terms[0].0;
            k != i && divides(hq, h) && (hq != h || k < i)
        });
        if !dominated {
            min.push(p.monic(ord));
        }
    }
    let mut out: Vec<NPoly<C>> = (0..min.len())
        .map(|i| {
            let others: Vec<NPoly<C>> =
                min.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, q)| q.clone()).collect();
            nf(&min[i], &others, ord)
        })
        .collect();
    out.sort_by(|a, b| ord.cmp(&b.terms[0].0, &a.terms[0].0));
    out
}

// --- conversions --------------------------------------------------------

pub fn to_bigint(i: &Integer) -> BigInt {
    i.to_string().parse().unwrap()
}

pub fn q_to_oracle(p: &Polynomial<RationalField>) -> NPoly<BigRational> {
    let ord = Ord3::of(p.ring().order());
    let raw = p
        .terms()
        .iter()
        .map(|(e, c)| {
            let m = e.as_slice().iter().map(|&x| x as u32).collect();
            (m, BigRational::new(to_bigint(c.numer()), to_bigint(c.denom())))
        })
        .collect();
    NPoly::from_unsorted(ord, raw)
}

pub fn fp_to_oracle(p: &Polynomial<ModularField>) -> NPoly<Fp> {
    let ord = Ord3::of(p.ring().order());
    let raw = p
        .terms()
        .iter()
        .map(|(e, c)| {
            let m = e.as_slice().iter().map(|&x| x as u32).collect();
            (m, Fp(c.value().to_u64().unwrap()))
        })
        .collect();
    NPoly::from_unsorted(ord, raw)
}

pub fn small_prime_ring(vars: usize, order: TermOrder) -> std::sync::Arc<PolyRing<ModularField>> {
    let f = ModularField::new(Integer::from(SMALL_P)).unwrap();
    PolyRing::new(names(vars), f, order).unwrap()
}

pub fn rational_ring(vars: usize, order: TermOrder) -> std::sync::Arc<PolyRing<RationalField>> {
    PolyRing::new(names(vars), RationalField, order).unwrap()
}

pub fn names(n: usize) -> Vec<String> {
    ["x", "y", "z", "w", "v", "t"][..n].iter().map(|s| s.to_string()).collect()
}

/// A polynomial from `(exponents, coefficient)` pairs with small integer
/// coefficients.
pub fn build<F: Field>(ring: &std::sync::Arc<PolyRing<F>>, terms: &[(Vec<u16>, i64)]) -> Polynomial<F> {
    let f = ring.field();
    let raw = terms
        .iter()
        .map(|(e, c)| (gb_core::ExpVec::new(e), f.from_i64(*c)))
        .filter(|(_, c)| !f.is_zero(c))
        .collect();
    Polynomial::from_terms(ring, raw).unwrap()
}
