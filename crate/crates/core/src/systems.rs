//! Standard benchmark systems.

use crate::arith::{Field, FieldDescriptor, RationalField};
use crate::error::{GbError, Result};
use crate::poly::{PolyRing, Polynomial, RingDescriptor, System, TermOrder};

/// Katsura-n: variables `u0..un`, `n + 1` equations.
pub fn katsura(n: usize) -> Result<System> {
    if n < 2 {
        return Err(GbError::Config("katsura needs n >= 2".into()));
    }
    let vars: Vec<String> = (0..=n).map(|i| format!("u{}", i)).collect();
    let ring = PolyRing::new(vars, RationalField, TermOrder::GradedRevLex)?;
    let u = |i: usize| Polynomial::var(&ring, i);
    let f = ring.field();
    let mut polys = Vec::with_capacity(n + 1);

    let two = f.from_i64(2);
    let mut lin = u(0).sub(&Polynomial::one(&ring))?;
    for i in 1..=n {
        lin = lin.add(&u(i).scale(&two))?;
    }
    polys.push(lin);

    let n = n as i64;
    for m in 0..n {
        let mut p = u(m as usize).neg();
        for i in -n..=n {
            let a = i.unsigned_abs() as i64;
            let b = (m - i).abs();
            if a > n || b > n {
                continue;
            }
            p = p.add(&u(a as usize).mul(&u(b as usize))?)?;
        }
        polys.push(p);
    }
    Ok(to_system(&ring, &polys))
}

/// Cyclic-n: variables `x0..x(n-1)`, `n` equations.
pub fn cyclic(n: usize) -> Result<System> {
    if n < 2 {
        return Err(GbError::Config("cyclic needs n >= 2".into()));
    }
    let vars: Vec<String> = (0..n).map(|i| format!("x{}", i)).collect();
    let ring = PolyRing::new(vars, RationalField, TermOrder::GradedRevLex)?;
    let mut polys = Vec::with_capacity(n);
    for k in 1..n {
        let mut p = Polynomial::zero(&ring);
        for start in 0..n {
            let mut t = Polynomial::one(&ring);
            for off in 0..k {
                t = t.mul(&Polynomial::var(&ring, (start + off) % n))?;
            }
            p = p.add(&t)?;
        }
        polys.push(p);
    }
    let mut last = Polynomial::one(&ring);
    for i in 0..n {
        last = last.mul(&Polynomial::var(&ring, i))?;
    }
    polys.push(last.sub(&Polynomial::one(&ring))?);
    Ok(to_system(&ring, &polys))
}

/// Parses `katsura:N` or `cyclic:N`.
pub fn named(spec: &str) -> Result<System> {
    let (name, n) = spec
        .split_once(':')
        .ok_or_else(|| GbError::Config(format!("expected NAME:N, got `{}`", spec)))?;
    let n: usize = n
        .trim()
        .parse()
        .map_err(|_| GbError::Config(format!("bad size in `{}`", spec)))?;
    match name.trim() {
        "katsura" => katsura(n),
        "cyclic" => cyclic(n),
        other => Err(GbError::Config(format!("unknown system `{}`", other))),
    }
}

fn to_system(ring: &PolyRing<RationalField>, polys: &[Polynomial<RationalField>]) -> System {
    let desc = RingDescriptor {
        vars: ring.vars().to_vec(),
        field: FieldDescriptor::Rational,
        order: ring.order(),
    };
    System::new(desc, polys.iter().map(|p| p.to_string()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn polys(s: &System) -> Vec<Polynomial<RationalField>> {
        let ring = s.ring.build(RationalField).unwrap();
        s.polynomials(&ring).unwrap()
    }

    #[test]
    fn katsura_2() {
        let s = katsura(2).unwrap();
        let ring = s.ring.build(RationalField).unwrap();
        let expect: Vec<_> = [
            "u0 + 2*u1 + 2*u2 - 1",
            "u0^2 + 2*u1^2 + 2*u2^2 - u0",
            "2*u0*u1 + 2*u1*u2 - u1",
        ]
        .iter()
        .map(|t| Polynomial::parse(&ring, t).unwrap())
        .collect();
        assert_eq!(polys(&s), expect);
    }

    #[test]
    fn cyclic_2() {
        let s = cyclic(2).unwrap();
        let ring = s.ring.build(RationalField).unwrap();
        let expect: Vec<_> = ["x0 + x1", "x0*x1 - 1"].iter().map(|t| Polynomial::parse(&ring, t).unwrap()).collect();
        assert_eq!(polys(&s), expect);
    }

    #[test]
    fn cyclic_3() {
        let s = cyclic(3).unwrap();
        let ring = s.ring.build(RationalField).unwrap();
        let expect: Vec<_> = ["x0 + x1 + x2", "x0*x1 + x1*x2 + x0*x2", "x0*x1*x2 - 1"]
            .iter()
            .map(|t| Polynomial::parse(&ring, t).unwrap())
            .collect();
        assert_eq!(polys(&s), expect);
    }

    #[test]
    fn sizes() {
        assert_eq!(katsura(8).unwrap().ring.vars.len(), 9);
        assert_eq!(katsura(8).unwrap().len(), 9);
        assert_eq!(cyclic(6).unwrap().len(), 6);
        assert!(named("katsura:3").is_ok());
        assert!(named("foo:3").is_err());
        assert!(named("cyclic").is_err());
        assert!(named("katsura:1").is_err());
        assert!(named("cyclic:1").is_err());
    }

    #[test]
    fn text_round_trip() {
        let s = cyclic(4).unwrap();
        let back = crate::poly::parse_system(&s.to_text()).unwrap();
        assert_eq!(polys(&back), polys(&s));
    }
}
