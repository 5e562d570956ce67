//! Canonical binary encoding of polynomials.
//!
//! Layout: `nvars: u16 BE`, `terms: u32 BE`, then per term `nvars`
//! exponents as `u16 LE` followed by the field's coefficient encoding
//! (sign byte plus length-prefixed big-endian magnitudes for rationals,
//! length-prefixed big-endian residue for prime fields). Terms appear in
//! descending order, so equal polynomials encode to equal bytes.

use std::sync::Arc;

use crate::arith::Field;
use crate::error::{GbError, Result};

use super::{ExpVec, Exp, PolyRing, Polynomial};

pub(super) fn encode<F: Field>(p: &Polynomial<F>) -> Vec<u8> {
    let nvars = p.ring().nvars();
    let mut out = Vec::with_capacity(6 + p.len() * (2 * nvars + 12));
    out.extend_from_slice(&(nvars as u16).to_be_bytes());
    out.extend_from_slice(&(p.len() as u32).to_be_bytes());
    let field = p.field();
    for (e, c) in p.terms() {
        for x in e.as_slice() {
            out.extend_from_slice(&x.to_le_bytes());
        }
        field.encode(c, &mut out);
    }
    out
}

pub(super) fn decode<F: Field>(ring: &Arc<PolyRing<F>>, bytes: &[u8]) -> Result<Polynomial<F>> {
    let mut input = bytes;
    let nvars = u16::from_be_bytes(take(&mut input, 2)?.try_into().unwrap()) as usize;
    if nvars != ring.nvars() {
        return Err(GbError::Decode(format!(
            "polynomial has {} variables, ring has {}",
            nvars,
            ring.nvars()
        )));
    }
    let count = u32::from_be_bytes(take(&mut input, 4)?.try_into().unwrap()) as usize;
    let field = ring.field();
    let order = ring.order();
    let mut terms: Vec<(ExpVec, F::Elem)> = Vec::with_capacity(count.min(1 << 16));
    let mut exps: Vec<Exp> = vec![0; nvars];
    for _ in 0..count {
        let raw = take(&mut input, 2 * nvars)?;
        for (x, chunk) in exps.iter_mut().zip(raw.chunks_exact(2)) {
            *x = u16::from_le_bytes([chunk[0], chunk[1]]);
        }
        let e = ExpVec::new(&exps);
        let c = field.decode(&mut input)?;
        if field.is_zero(&c) {
            return Err(GbError::Decode("zero coefficient".into()));
        }
        if let Some((prev, _)) = terms.last() {
            if !order.cmp(prev, &e).is_gt() {
                return Err(GbError::Decode("terms not strictly descending".into()));
            }
        }
        terms.push((e, c));
    }
    if !input.is_empty() {
        return Err(GbError::Decode("trailing bytes after polynomial".into()));
    }
    Ok(Polynomial::from_sorted(ring.clone(), terms))
}

fn take<'a>(input: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
    if input.len() < n {
        return Err(GbError::Decode("truncated polynomial".into()));
    }
    let (h, t) = input.split_at(n);
    *input = t;
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{parse_modulus, ModularField, RationalField};
    use crate::poly::TermOrder;

    #[test]
    fn known_bytes() {
        let ring = PolyRing::new(vec!["x".into(), "y".into()], RationalField, TermOrder::Lex).unwrap();
        let p = Polynomial::parse(&ring, "-3/2*x*y^2").unwrap();
        let bytes = p.encode();
        #[rustfmt::skip]
        let expected = [
            0, 2, 0, 0, 0, 1,   // nvars, term count
            1, 0, 2, 0,         // exponents (1, 2) little-endian
            1, 0, 0, 0, 1, 3,   // sign, |num| = 3
            0, 0, 0, 1, 2,      // den = 2
        ];
        assert_eq!(bytes, expected);
        assert_eq!(Polynomial::decode(&ring, &bytes).unwrap(), p);
    }

    #[test]
    fn rejects_malformed_input() {
        let ring = PolyRing::new(vec!["x".into()], RationalField, TermOrder::Lex).unwrap();
        let p = Polynomial::parse(&ring, "x^2 + x").unwrap();
        let bytes = p.encode();
        assert!(Polynomial::decode(&ring, &bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(Polynomial::decode(&ring, &extra).is_err());
        // Swap the two terms: no longer descending.
        let q = Polynomial::parse(&ring, "x").unwrap().encode();
        let r = Polynomial::parse(&ring, "x^2").unwrap().encode();
        let mut swapped = vec![0, 1, 0, 0, 0, 2];
        swapped.extend_from_slice(&q[6..]);
        swapped.extend_from_slice(&r[6..]);
        assert!(Polynomial::decode(&ring, &swapped).is_err());

        let two = PolyRing::new(vec!["x".into(), "y".into()], RationalField, TermOrder::Lex).unwrap();
        assert!(Polynomial::decode(&two, &bytes).is_err());
    }

    #[test]
    fn modular_round_trip() {
        let f = ModularField::new(parse_modulus("2^127-1").unwrap()).unwrap();
        let ring = PolyRing::new(vec!["a".into(), "b".into()], f, TermOrder::GradedRevLex).unwrap();
        let p = Polynomial::parse(&ring, "a^3 - 1/3*a*b + 17").unwrap();
        assert_eq!(Polynomial::decode(&ring, &p.encode()).unwrap(), p);
        assert_eq!(Polynomial::decode(&ring, &Polynomial::zero(&ring).encode()).unwrap(), Polynomial::zero(&ring));
    }
}
