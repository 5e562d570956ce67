//! Independent Gröbner basis checker: its own term representation,
//! term-order keys and reduction loop, sharing nothing with the engine
//! beyond reading its output.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::OnceLock;

use gb_core::arith::parse_modulus;
use gb_core::{systems, Field, ModularField, Polynomial, RationalField, TermOrder};
use rug::ops::RemRounding;
use rug::{Integer, Rational};

pub const MODULUS: &str = "2^127-1";

pub fn zp() -> ModularField {
    ModularField::new(parse_modulus(MODULUS).unwrap()).unwrap()
}

fn prime() -> &'static Integer {
    static P: OnceLock<Integer> = OnceLock::new();
    P.get_or_init(|| (Integer::from(1) << 127) - 1)
}

pub trait Coef: Clone + PartialEq {
    fn is_zero(&self) -> bool;
    fn neg(&self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
}

impl Coef for Rational {
    fn is_zero(&self) -> bool {
        self.cmp0().is_eq()
    }
    fn neg(&self) -> Self {
        Rational::from(-self)
    }
    fn sub(&self, o: &Self) -> Self {
        Rational::from(self - o)
    }
    fn mul(&self, o: &Self) -> Self {
        Rational::from(self * o)
    }
    fn div(&self, o: &Self) -> Self {
        Rational::from(self / o)
    }
}

/// Residue modulo 2^127 - 1.
#[derive(Clone, PartialEq, Debug)]
pub struct Mp(pub Integer);

impl Mp {
    fn norm(v: Integer) -> Self {
        Mp(v.rem_euc(prime()))
    }
}

impl Coef for Mp {
    fn is_zero(&self) -> bool {
        self.0.cmp0().is_eq()
    }
    fn neg(&self) -> Self {
        Mp::norm(Integer::from(-&self.0))
    }
    fn sub(&self, o: &Self) -> Self {
        Mp::norm(Integer::from(&self.0 - &o.0))
    }
    fn mul(&self, o: &Self) -> Self {
        Mp::norm(Integer::from(&self.0 * &o.0))
    }
    fn div(&self, o: &Self) -> Self {
        let inv = o.0.clone().invert(prime()).expect("nonzero residue");
        Mp::norm(Integer::from(&self.0 * &inv))
    }
}

/// Engine fields the checker can read.
pub trait Checked: Field {
    type C: Coef;
    fn coef(&self, c: &Self::Elem) -> Self::C;
}

impl Checked for RationalField {
    type C = Rational;
    fn coef(&self, c: &Self::Elem) -> Rational {
        Rational::from((c.numer().clone(), c.denom().clone()))
    }
}

impl Checked for ModularField {
    type C = Mp;
    fn coef(&self, c: &Self::Elem) -> Mp {
        assert_eq!(self.modulus(), prime(), "checker works modulo 2^127 - 1 only");
        Mp(c.value().clone())
    }
}

/// Sort key whose natural order is the term order.
fn key(order: TermOrder, e: &[u32]) -> Vec<i64> {
    let d: i64 = e.iter().map(|&x| x as i64).sum();
    match order {
        TermOrder::Lex => e.iter().map(|&x| x as i64).collect(),
        TermOrder::GradedLex => std::iter::once(d).chain(e.iter().map(|&x| x as i64)).collect(),
        TermOrder::GradedRevLex => std::iter::once(d).chain(e.iter().rev().map(|&x| -(x as i64))).collect(),
    }
}

#[derive(Clone)]
pub struct P<C> {
    order: TermOrder,
    terms: BTreeMap<Vec<i64>, (Vec<u32>, C)>,
}

impl<C: Coef> P<C> {
    pub fn convert<F: Checked<C = C>>(p: &Polynomial<F>) -> Self {
        let order = p.ring().order();
        let f = p.ring().field();
        let mut terms = BTreeMap::new();
        for (e, c) in p.terms() {
            let e: Vec<u32> = e.as_slice().iter().map(|&x| x as u32).collect();
            terms.insert(key(order, &e), (e, f.coef(c)));
        }
        P { order, terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn lead(&self) -> (&Vec<u32>, &C) {
        let (_, (e, c)) = self.terms.last_key_value().expect("nonzero");
        (e, c)
    }

    /// `self -= f * x^m * q`.
    fn sub_scaled(&mut self, q: &Self, f: &C, m: &[u32]) {
        for (e, c) in q.terms.values() {
            let e: Vec<u32> = e.iter().zip(m).map(|(a, b)| a + b).collect();
            let k = key(self.order, &e);
            let t = f.mul(c);
            match self.terms.get_mut(&k) {
                Some((_, d)) => {
                    *d = d.sub(&t);
                    if d.is_zero() {
                        self.terms.remove(&k);
                    }
                }
                None => {
                    self.terms.insert(k, (e, t.neg()));
                }
            }
        }
    }

    pub fn s_poly(a: &Self, b: &Self) -> Self {
        let (ea, ca) = a.lead();
        let (eb, cb) = b.lead();
        let l: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| *x.max(y)).collect();
        let ma: Vec<u32> = l.iter().zip(ea).map(|(x, y)| x - y).collect();
        let mb: Vec<u32> = l.iter().zip(eb).map(|(x, y)| x - y).collect();
        let mut s = P { order: a.order, terms: BTreeMap::new() };
        let one = ca.div(ca);
        s.sub_scaled(b, &one.div(cb), &mb);
        s.sub_scaled(a, &one.div(ca).neg(), &ma);
        s
    }

    /// Full normal form, first divisor in list order.
    pub fn normal_form(&self, g: &[Self]) -> Self {
        let mut p = self.clone();
        let mut rest = BTreeMap::new();
        while let Some((k, (e, c))) = p.terms.pop_last() {
            match g.iter().find(|q| q.lead().0.iter().zip(&e).all(|(a, b)| a <= b)) {
                Some(q) => {
                    let (qe, qc) = q.lead();
                    let m: Vec<u32> = e.iter().zip(qe).map(|(a, b)| a - b).collect();
                    let f = c.div(qc);
                    let mut tail = q.clone();
                    tail.terms.pop_last();
                    p.sub_scaled(&tail, &f, &m);
                }
                None => {
                    rest.insert(k, (e, c));
                }
            }
        }
        P { order: p.order, terms: rest }
    }
}

/// Checks that every S-polynomial of `basis` and every generator reduce to
/// zero against `basis`.
pub fn check_basis<F: Checked>(gens: &[Polynomial<F>], basis: &[Polynomial<F>]) -> Result<(), String> {
    let b: Vec<P<F::C>> = basis.iter().map(P::convert).collect();
    for i in 0..b.len() {
        for j in i + 1..b.len() {
            if !P::s_poly(&b[i], &b[j]).normal_form(&b).is_zero() {
                return Err(format!("S-polynomial of basis elements {i} and {j} does not reduce to zero"));
            }
        }
    }
    for (k, g) in gens.iter().enumerate() {
        if !P::convert(g).normal_form(&b).is_zero() {
            return Err(format!("generator {k} does not reduce to zero"));
        }
    }
    Ok(())
}

/// The named system over `field` in `order`.
pub fn system<F: Field>(name: &str, order: TermOrder, field: F) -> Vec<Polynomial<F>> {
    let s = systems::named(name).unwrap();
    let mut d = s.ring.clone();
    d.field = field.descriptor();
    d.order = order;
    s.polynomials(&d.build(field).unwrap()).unwrap()
}

#[test]
fn checker_accepts_basis_and_rejects_generators() {
    let gens = system("cyclic:3", TermOrder::GradedRevLex, RationalField);
    let (basis, _) = gb_core::gb_sequential(&gens).unwrap();
    assert_eq!(check_basis(&gens, &basis), Ok(()));
    assert!(check_basis(&gens, &gens).is_err());
    let gens = system("katsura:3", TermOrder::Lex, zp());
    let (basis, _) = gb_core::gb_sequential(&gens).unwrap();
    assert_eq!(check_basis(&gens, &basis), Ok(()));
    assert!(check_basis(&gens, &gens).is_err());
}
