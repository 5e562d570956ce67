//! Exact coefficient fields.
//!
//! Two fields are provided: the rationals ([`RationalField`]) with
//! arbitrary-precision numerator and denominator, and prime fields
//! ([`ModularField`]) with a modulus of arbitrary size. Field elements are
//! plain immutable values; all context needed for arithmetic (the modulus)
//! lives in the field object, which is shared by a polynomial ring.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rug::integer::{IsPrime, Order};
use rug::Integer;

use crate::error::{GbError, Result};

/// Operations every coefficient field must provide.
///
/// The engine is generic over this trait; all arithmetic goes through the
/// field object so that elements themselves stay small.
pub trait Field: Clone + fmt::Debug + PartialEq + Send + Sync + 'static {
    type Elem: Clone + fmt::Debug + PartialEq + Eq + Send + Sync + 'static;

    fn descriptor(&self) -> FieldDescriptor;
    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    #[allow(clippy::wrong_self_convention)]
    fn from_i64(&self, v: i64) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn is_one(&self, a: &Self::Elem) -> bool;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn inv(&self, a: &Self::Elem) -> Result<Self::Elem>;

    fn div(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem> {
        Ok(self.mul(a, &self.inv(b)?))
    }

    /// `a - b * c`, the inner step of every reduction.
    fn sub_mul(&self, a: &Self::Elem, b: &Self::Elem, c: &Self::Elem) -> Self::Elem {
        self.sub(a, &self.mul(b, c))
    }

    /// Whether the printed form of `a` starts with a minus sign.
    fn is_negative(&self, _a: &Self::Elem) -> bool {
        false
    }

    fn parse(&self, s: &str) -> Result<Self::Elem>;
    fn format(&self, a: &Self::Elem) -> String;
    fn encode(&self, a: &Self::Elem, out: &mut Vec<u8>);
    fn decode(&self, input: &mut &[u8]) -> Result<Self::Elem>;
}

/// Runtime description of a coefficient field, used by file headers, CLI
/// flags and job descriptors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FieldDescriptor {
    Rational,
    Modular(Integer),
}

impl FieldDescriptor {
    pub fn modulus(&self) -> Option<&Integer> {
        match self {
            FieldDescriptor::Rational => None,
            FieldDescriptor::Modular(m) => Some(m),
        }
    }
}

impl fmt::Display for FieldDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldDescriptor::Rational => write!(f, "Q"),
            FieldDescriptor::Modular(m) => write!(f, "Zp {}", m),
        }
    }
}

fn parse_integer(s: &str) -> Option<Integer> {
    let s = s.trim();
    let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Integer::from_str(s).ok()
}

/// Parses a modulus given in decimal or as `2^k-1` / `2^k+c` shorthand.
pub fn parse_modulus(s: &str) -> Result<Integer> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || GbError::Config(format!("invalid modulus `{}`", s));
    let m = if let Some((base, rest)) = s.split_once('^') {
        let base = parse_integer(base).filter(|b| *b >= 0).ok_or_else(bad)?;
        let split = rest.find(['+', '-']).unwrap_or(rest.len());
        let exp: u32 = rest[..split].parse().map_err(|_| bad())?;
        let pow = Integer::from(rug::ops::Pow::pow(&base, exp));
        match &rest[split..] {
            "" => pow,
            tail => {
                let off = parse_integer(&tail[1..]).filter(|o| *o >= 0).ok_or_else(bad)?;
                if tail.starts_with('+') {
                    pow + off
                } else {
                    pow - off
                }
            }
        }
    } else {
        parse_integer(&s).ok_or_else(bad)?
    };
    if m < 2 {
        return Err(GbError::Config(format!("modulus must be at least 2, got {}", m)));
    }
    Ok(m)
}

// ---------------------------------------------------------------------------
// Rationals

/// An exact rational number, always stored in lowest terms with a positive
/// denominator. Zero is `0/1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rational(rug::Rational);

impl Rational {
    pub fn new(num: Integer, den: Integer) -> Result<Self> {
        if den == 0 {
            return Err(GbError::DivisionByZero);
        }
        Ok(Rational(rug::Rational::from((num, den))))
    }

    pub fn from_integer(num: Integer) -> Self {
        Rational(rug::Rational::from(num))
    }

    pub fn zero() -> Self {
        Rational(rug::Rational::new())
    }

    pub fn one() -> Self {
        Rational(rug::Rational::from(1))
    }

    pub fn numer(&self) -> &Integer {
        self.0.numer()
    }

    pub fn denom(&self) -> &Integer {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.cmp0().is_eq()
    }

    pub fn is_one(&self) -> bool {
        *self.0.numer() == 1 && *self.0.denom() == 1
    }

    pub fn is_integer(&self) -> bool {
        *self.0.denom() == 1
    }

    pub fn is_negative(&self) -> bool {
        self.0.cmp0().is_lt()
    }

    pub fn add(&self, other: &Rational) -> Rational {
        Rational(rug::Rational::from(&self.0 + &other.0))
    }

    pub fn sub(&self, other: &Rational) -> Rational {
        Rational(rug::Rational::from(&self.0 - &other.0))
    }

    pub fn mul(&self, other: &Rational) -> Rational {
        Rational(rug::Rational::from(&self.0 * &other.0))
    }

    pub fn neg(&self) -> Rational {
        Rational(rug::Rational::from(-&self.0))
    }

    pub fn inv(&self) -> Result<Rational> {
        if self.is_zero() {
            return Err(GbError::DivisionByZero);
        }
        Ok(Rational(rug::Rational::from(self.0.recip_ref())))
    }
}

impl FromStr for Rational {
    type Err = GbError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || GbError::Config(format!("invalid rational `{}`", s));
        match s.split_once('/') {
            Some((n, d)) => {
                let n = parse_integer(n).ok_or_else(bad)?;
                let d = parse_integer(d).ok_or_else(bad)?;
                Rational::new(n, d)
            }
            None => Ok(Rational::from_integer(parse_integer(s).ok_or_else(bad)?)),
        }
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

fn encode_magnitude(m: &Integer, out: &mut Vec<u8>) {
    let bytes = m.to_digits::<u8>(Order::Msf);
    out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
    out.extend_from_slice(&bytes);
}

fn take<'a>(input: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
    if input.len() < n {
        return Err(GbError::Decode("truncated input".into()));
    }
    let (head, tail) = input.split_at(n);
    *input = tail;
    Ok(head)
}

fn decode_magnitude(input: &mut &[u8]) -> Result<Integer> {
    let len = u32::from_be_bytes(take(input, 4)?.try_into().unwrap()) as usize;
    let bytes = take(input, len)?;
    if bytes.first() == Some(&0) {
        return Err(GbError::Decode("non-canonical magnitude".into()));
    }
    Ok(Integer::from_digits(bytes, Order::Msf))
}

/// The field of rational numbers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RationalField;

impl Field for RationalField {
    type Elem = Rational;

    fn descriptor(&self) -> FieldDescriptor {
        FieldDescriptor::Rational
    }
    fn zero(&self) -> Rational {
        Rational::zero()
    }
    fn one(&self) -> Rational {
        Rational::one()
    }
    fn from_i64(&self, v: i64) -> Rational {
        Rational::from_integer(Integer::from(v))
    }
    fn is_zero(&self, a: &Rational) -> bool {
        a.is_zero()
    }
    fn is_one(&self, a: &Rational) -> bool {
        a.is_one()
    }
    fn add(&self, a: &Rational, b: &Rational) -> Rational {
        a.add(b)
    }
    fn sub(&self, a: &Rational, b: &Rational) -> Rational {
        a.sub(b)
    }
    fn neg(&self, a: &Rational) -> Rational {
        a.neg()
    }
    fn mul(&self, a: &Rational, b: &Rational) -> Rational {
        a.mul(b)
    }
    fn inv(&self, a: &Rational) -> Result<Rational> {
        a.inv()
    }

    fn sub_mul(&self, a: &Rational, b: &Rational, c: &Rational) -> Rational {
        let mut t = rug::Rational::from(&b.0 * &c.0);
        t -= &a.0;
        t = -t;
        Rational(t)
    }

    fn is_negative(&self, a: &Rational) -> bool {
        a.is_negative()
    }
    fn parse(&self, s: &str) -> Result<Rational> {
        s.parse()
    }
    fn format(&self, a: &Rational) -> String {
        a.to_string()
    }

    fn encode(&self, a: &Rational, out: &mut Vec<u8>) {
        out.push(a.is_negative() as u8);
        encode_magnitude(a.numer(), out);
        encode_magnitude(a.denom(), out);
    }

    fn decode(&self, input: &mut &[u8]) -> Result<Rational> {
        let sign = take(input, 1)?[0];
        let num = decode_magnitude(input)?;
        let den = decode_magnitude(input)?;
        let num = match sign {
            0 => num,
            1 if num != 0 => -num,
            _ => return Err(GbError::Decode("bad sign byte".into())),
        };
        if den == 0 {
            return Err(GbError::Decode("zero denominator".into()));
        }
        let r = Rational::new(num.clone(), den.clone())?;
        if *r.numer() != num || *r.denom() != den {
            return Err(GbError::Decode("rational not in lowest terms".into()));
        }
        Ok(r)
    }
}

// ---------------------------------------------------------------------------
// Prime fields

/// An element of a prime field: the canonical residue in `[0, modulus)`.
/// The modulus itself is held by the [`ModularField`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ModInt(Integer);

impl ModInt {
    pub fn value(&self) -> &Integer {
        &self.0
    }
}

#[derive(Debug)]
struct ModulusInner {
    modulus: Integer,
    // Set when the modulus is 2^k - 1; reduction then uses shifts.
    mersenne: Option<u32>,
}

/// The field `Z/pZ` for a prime `p` of any size.
///
/// Primality is the caller's responsibility; [`ModularField::new_checked`]
/// runs a probabilistic test for debugging.
#[derive(Clone, Debug)]
pub struct ModularField {
    inner: Arc<ModulusInner>,
}

impl PartialEq for ModularField {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner.modulus == other.inner.modulus
    }
}

impl ModularField {
    pub fn new(modulus: Integer) -> Result<Self> {
        if modulus < 2 {
            return Err(GbError::Config(format!("modulus must be at least 2, got {}", modulus)));
        }
        let plus_one = Integer::from(&modulus + 1);
        let mersenne = plus_one.is_power_of_two().then(|| plus_one.significant_bits() - 1);
        Ok(ModularField { inner: Arc::new(ModulusInner { modulus, mersenne }) })
    }

    /// Like [`ModularField::new`] but rejects moduli that fail a
    /// probabilistic primality test.
    pub fn new_checked(modulus: Integer) -> Result<Self> {
        if !is_probable_prime(&modulus) {
            return Err(GbError::Config(format!("modulus {} is not prime", modulus)));
        }
        Self::new(modulus)
    }

    pub fn modulus(&self) -> &Integer {
        &self.inner.modulus
    }

    pub fn element(&self, v: &Integer) -> ModInt {
        let mut r = Integer::from(v % &self.inner.modulus);
        if r < 0 {
            r += &self.inner.modulus;
        }
        ModInt(r)
    }

    /// Reduces a non-negative integer below `modulus^2`.
    fn reduce(&self, mut x: Integer) -> Integer {
        let m = &self.inner.modulus;
        match self.inner.mersenne {
            Some(k) => {
                while x.significant_bits() > k {
                    let high = Integer::from(&x >> k);
                    x.keep_bits_mut(k);
                    x += high;
                }
                if &x == m {
                    Integer::new()
                } else {
                    x
                }
            }
            None => {
                if &x >= m {
                    x %= m;
                }
                x
            }
        }
    }
}

impl Field for ModularField {
    type Elem = ModInt;

    fn descriptor(&self) -> FieldDescriptor {
        FieldDescriptor::Modular(self.inner.modulus.clone())
    }
    fn zero(&self) -> ModInt {
        ModInt(Integer::new())
    }
    fn one(&self) -> ModInt {
        ModInt(Integer::from(1))
    }
    fn from_i64(&self, v: i64) -> ModInt {
        self.element(&Integer::from(v))
    }
    fn is_zero(&self, a: &ModInt) -> bool {
        a.0 == 0
    }
    fn is_one(&self, a: &ModInt) -> bool {
        a.0 == 1
    }

    fn add(&self, a: &ModInt, b: &ModInt) -> ModInt {
        let mut s = Integer::from(&a.0 + &b.0);
        if s >= self.inner.modulus {
            s -= &self.inner.modulus;
        }
        ModInt(s)
    }

    fn sub(&self, a: &ModInt, b: &ModInt) -> ModInt {
        let mut d = Integer::from(&a.0 - &b.0);
        if d < 0 {
            d += &self.inner.modulus;
        }
        ModInt(d)
    }

    fn neg(&self, a: &ModInt) -> ModInt {
        if a.0 == 0 {
            a.clone()
        } else {
            ModInt(Integer::from(&self.inner.modulus - &a.0))
        }
    }

    fn mul(&self, a: &ModInt, b: &ModInt) -> ModInt {
        ModInt(self.reduce(Integer::from(&a.0 * &b.0)))
    }

    /// Extended Euclid (GMP's `mpz_invert`); a non-invertible element of a
    /// composite modulus is reported as division by zero.
    fn inv(&self, a: &ModInt) -> Result<ModInt> {
        if a.0 == 0 {
            return Err(GbError::DivisionByZero);
        }
        match a.0.invert_ref(&self.inner.modulus) {
            Some(r) => Ok(ModInt(Integer::from(r))),
            None => Err(GbError::DivisionByZero),
        }
    }

    fn parse(&self, s: &str) -> Result<ModInt> {
        let r: Rational = s.parse()?;
        let n = self.element(r.numer());
        let d = self.element(r.denom());
        self.div(&n, &d)
    }

    fn format(&self, a: &ModInt) -> String {
        a.0.to_string()
    }

    fn encode(&self, a: &ModInt, out: &mut Vec<u8>) {
        encode_magnitude(&a.0, out);
    }

    fn decode(&self, input: &mut &[u8]) -> Result<ModInt> {
        let v = decode_magnitude(input)?;
        if v >= self.inner.modulus {
            return Err(GbError::Decode("residue out of range".into()));
        }
        Ok(ModInt(v))
    }
}

/// Probabilistic primality test (GMP, 30 Miller-Rabin rounds).
pub fn is_probable_prime(n: &Integer) -> bool {
    n.is_probably_prime(30) != IsPrime::No
}

/// Builds a field from its descriptor and hands it to `f`, which is
/// generic over the concrete field type.
#[macro_export]
macro_rules! with_field {
    ($desc:expr, |$field:ident| $body:expr) => {
        match $desc {
            $crate::arith::FieldDescriptor::Rational => {
                let $field = $crate::arith::RationalField;
                $body
            }
            $crate::arith::FieldDescriptor::Modular(m) => {
                let $field = $crate::arith::ModularField::new(m.clone())?;
                $body
            }
        }
    };
}
