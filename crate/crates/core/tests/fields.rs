//! Randomized field-axiom checks for both coefficient fields.

use gb_core::arith::{parse_modulus, ModInt, Rational};
use gb_core::{Field, ModularField, RationalField};
use proptest::prelude::*;
use rug::Integer;

fn rational() -> impl Strategy<Value = Rational> {
    prop_oneof![
        (any::<i64>(), 1..i64::MAX).prop_map(|(n, d)| Rational::new(Integer::from(n), Integer::from(d)).unwrap()),
        (-50i64..50, 1i64..50).prop_map(|(n, d)| Rational::new(Integer::from(n), Integer::from(d)).unwrap()),
        // numerators well beyond 64 bits
        (any::<i64>(), any::<u64>(), 1u64..u64::MAX).prop_map(|(a, b, d)| {
            let n = Integer::from(a) * Integer::from(u64::MAX) + Integer::from(b);
            Rational::new(n, Integer::from(d)).unwrap()
        }),
    ]
}

fn mersenne() -> ModularField {
    ModularField::new(parse_modulus("2^127-1").unwrap()).unwrap()
}

fn residue() -> impl Strategy<Value = ModInt> {
    (any::<u128>(), any::<i64>()).prop_map(|(a, b)| {
        let f = mersenne();
        f.element(&(Integer::from(a) * Integer::from(b)))
    })
}

fn check_axioms<F: Field>(f: &F, a: &F::Elem, b: &F::Elem, c: &F::Elem) {
    assert_eq!(f.add(&f.add(a, b), c), f.add(a, &f.add(b, c)));
    assert_eq!(f.mul(&f.mul(a, b), c), f.mul(a, &f.mul(b, c)));
    assert_eq!(f.add(a, b), f.add(b, a));
    assert_eq!(f.mul(a, b), f.mul(b, a));
    assert_eq!(f.mul(a, &f.add(b, c)), f.add(&f.mul(a, b), &f.mul(a, c)));
    assert_eq!(f.add(a, &f.zero()), *a);
    assert_eq!(f.mul(a, &f.one()), *a);
    assert!(f.is_zero(&f.add(a, &f.neg(a))));
    assert_eq!(f.sub(a, b), f.add(a, &f.neg(b)));
    assert_eq!(f.sub_mul(a, b, c), f.sub(a, &f.mul(b, c)));
    if !f.is_zero(a) {
        assert!(f.is_one(&f.mul(a, &f.inv(a).unwrap())));
        assert_eq!(f.div(b, a).unwrap(), f.mul(b, &f.inv(a).unwrap()));
    } else {
        assert!(f.inv(a).is_err());
    }
    let mut buf = Vec::new();
    f.encode(a, &mut buf);
    let mut input = buf.as_slice();
    assert_eq!(f.decode(&mut input).unwrap(), *a);
    assert!(input.is_empty());
    assert_eq!(f.parse(&f.format(a)).unwrap(), *a);
}

fn normalized(r: &Rational) -> bool {
    *r.denom() > 0 && Integer::from(r.numer().gcd_ref(r.denom())) == 1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn rational_field_axioms(a in rational(), b in rational(), c in rational()) {
        let f = RationalField;
        check_axioms(&f, &a, &b, &c);
        for r in [f.add(&a, &b), f.mul(&a, &c), f.sub(&b, &c), f.neg(&a)] {
            prop_assert!(normalized(&r));
        }
        if !a.is_zero() {
            prop_assert!(normalized(&f.inv(&a).unwrap()));
        }
    }

    #[test]
    fn modular_field_axioms(a in residue(), b in residue(), c in residue()) {
        let f = mersenne();
        check_axioms(&f, &a, &b, &c);
        let m = f.modulus();
        for r in [f.add(&a, &b), f.mul(&a, &c), f.sub(&b, &c), f.neg(&a)] {
            prop_assert!(*r.value() >= 0 && r.value() < m);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn small_prime_matches_integer_arithmetic(a in -1000i64..1000, b in -1000i64..1000) {
        let f = ModularField::new(Integer::from(10007)).unwrap();
        let expect = (a * b).rem_euclid(10007);
        prop_assert_eq!(f.mul(&f.from_i64(a), &f.from_i64(b)), f.from_i64(expect));
        let expect = (a - b).rem_euclid(10007);
        prop_assert_eq!(f.sub(&f.from_i64(a), &f.from_i64(b)), f.from_i64(expect));
    }
}

#[test]
fn large_modulus_inverse() {
    // a 969-digit modulus; primality is not checked at construction
    let m = parse_modulus("2^3217-1").unwrap();
    let f = ModularField::new(m).unwrap();
    let a = f.from_i64(123456789);
    assert!(f.is_one(&f.mul(&a, &f.inv(&a).unwrap())));
}
