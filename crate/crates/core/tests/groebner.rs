//! Gröbner basis drivers against the naive oracle, frozen golden bases
//! and structural properties.

mod common;

use std::sync::Arc;

use common::*;
use gb_core::pairs::PairListConfig;
use gb_core::poly::parse_system;
use gb_core::{
    gb_parallel, gb_sequential, gb_sequential_with, normal_form, reduced_gb, Field, PairOrder, Polynomial,
    RationalField, Selection, TermOrder, TieBreak,
};
use proptest::prelude::*;

type Raw = Vec<(Vec<u16>, i64)>;

fn raw_system(vars: usize, gens: usize, deg: u16, terms: usize) -> impl Strategy<Value = Vec<Raw>> {
    let poly = prop::collection::vec((prop::collection::vec(0..=deg, vars), -5i64..=5), 1..=terms)
        .prop_filter("total degree", move |t| t.iter().all(|(e, _)| e.iter().sum::<u16>() <= deg));
    prop::collection::vec(poly, 1..=gens)
}

fn order() -> impl Strategy<Value = TermOrder> {
    prop_oneof![Just(TermOrder::Lex), Just(TermOrder::GradedLex), Just(TermOrder::GradedRevLex)]
}

fn assert_gb_properties<F: Field>(gens: &[Polynomial<F>], basis: &[Polynomial<F>]) {
    for (i, a) in basis.iter().enumerate() {
        for b in &basis[i + 1..] {
            let s = a.s_polynomial(b).unwrap();
            assert!(normal_form(basis, &s).unwrap().is_zero(), "S({}, {}) does not reduce to 0", a, b);
        }
    }
    for g in gens {
        assert!(normal_form(basis, g).unwrap().is_zero(), "generator {} not in ideal", g);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn small_prime_matches_naive_oracle(o in order(), sys in raw_system(3, 3, 3, 4)) {
        let r = small_prime_ring(3, o);
        let gens: Vec<_> = sys.iter().map(|t| build(&r, t)).collect();
        let (basis, stats) = gb_sequential(&gens).unwrap();
        assert_gb_properties(&gens, &basis);
        let oracle = naive_reduced_gb(&gens.iter().map(fp_to_oracle).collect::<Vec<_>>(), Ord3::of(o));
        let ours: Vec<_> = basis.iter().map(fp_to_oracle).collect();
        prop_assert_eq!(ours, oracle);
        prop_assert_eq!(stats.rem_count, stats.zero_reductions + stats.put_count - nonzero_distinct(&gens));
    }

    #[test]
    fn rationals_match_naive_oracle(o in order(), sys in raw_system(2, 3, 3, 3)) {
        let r = rational_ring(2, o);
        let gens: Vec<_> = sys.iter().map(|t| build(&r, t)).collect();
        let (basis, _) = gb_sequential(&gens).unwrap();
        assert_gb_properties(&gens, &basis);
        let oracle = naive_reduced_gb(&gens.iter().map(q_to_oracle).collect::<Vec<_>>(), Ord3::of(o));
        let ours: Vec<_> = basis.iter().map(q_to_oracle).collect();
        prop_assert_eq!(ours, oracle);
    }

    #[test]
    fn criteria_are_sound(o in order(), sys in raw_system(4, 3, 3, 4)) {
        let r = small_prime_ring(4, o);
        let gens: Vec<_> = sys.iter().map(|t| build(&r, t)).collect();
        let (with, _) = gb_sequential(&gens).unwrap();
        let off = PairListConfig { criteria: false, ..Default::default() };
        let (without, _) = gb_sequential_with(&gens, off).unwrap();
        prop_assert_eq!(with, without);
    }

    #[test]
    fn strategies_agree(sys in raw_system(3, 3, 3, 4)) {
        let r = small_prime_ring(3, TermOrder::GradedRevLex);
        let gens: Vec<_> = sys.iter().map(|t| build(&r, t)).collect();
        let (base, _) = gb_sequential(&gens).unwrap();
        for order in [PairOrder::HeadTerm, PairOrder::Sequence] {
            for ties in [TieBreak::NewestFirst, TieBreak::OldestFirst] {
                let cfg = PairListConfig { order, ties, selection: Selection::SequentialOrder, criteria: true };
                prop_assert_eq!(&gb_sequential_with(&gens, cfg).unwrap().0, &base);
            }
        }
    }

    #[test]
    fn reduced_basis_is_canonical(sys in raw_system(3, 3, 3, 4), seed in any::<u64>()) {
        let r = small_prime_ring(3, TermOrder::GradedRevLex);
        let gens: Vec<_> = sys.iter().map(|t| build(&r, t)).collect();
        let (basis, _) = gb_sequential(&gens).unwrap();
        prop_assert_eq!(&reduced_gb(&basis).unwrap(), &basis);
        // shuffled generators, with redundant combinations appended
        let mut shuffled = gens.clone();
        let n = shuffled.len();
        shuffled.rotate_left((seed as usize) % n);
        shuffled.push(gens[0].add(&gens[n - 1]).unwrap());
        prop_assert_eq!(gb_sequential(&shuffled).unwrap().0, basis.clone());
        // reduced_gb of a non-reduced GB of the same ideal
        let mut padded: Vec<_> = basis.iter().map(|p| p.scale(&r.field().from_i64(7))).collect();
        padded.extend(basis.iter().map(|p| p.mul(&Polynomial::var(&r, 0)).unwrap()));
        padded.reverse();
        prop_assert_eq!(reduced_gb(&padded).unwrap(), basis);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn parallel_matches_sequential(sys in raw_system(3, 3, 3, 4), threads in 1usize..=4) {
        let r = small_prime_ring(3, TermOrder::GradedRevLex);
        let gens: Vec<_> = sys.iter().map(|t| build(&r, t)).collect();
        let (seq, _) = gb_sequential(&gens).unwrap();
        let (par, _) = gb_parallel(&gens, threads).unwrap();
        prop_assert_eq!(par, seq);
    }
}

fn nonzero_distinct<F: Field>(gens: &[Polynomial<F>]) -> u64 {
    let mut seen: Vec<Polynomial<F>> = Vec::new();
    for g in gens.iter().filter(|g| !g.is_zero()).map(|g| g.make_monic()) {
        if !seen.contains(&g) {
            seen.push(g);
        }
    }
    seen.len() as u64
}

#[test]
fn repeated_parallel_runs_are_identical() {
    let r = small_prime_ring(3, TermOrder::GradedRevLex);
    let gens = vec![
        build(&r, &[(vec![2, 1, 0], 3), (vec![0, 1, 1], -2), (vec![1, 0, 0], 1)]),
        build(&r, &[(vec![1, 1, 1], 1), (vec![0, 2, 0], 4), (vec![0, 0, 1], -1)]),
        build(&r, &[(vec![0, 0, 3], 2), (vec![1, 1, 0], 1), (vec![0, 0, 0], -5)]),
    ];
    let (seq, _) = gb_sequential(&gens).unwrap();
    let mut puts = std::collections::BTreeSet::new();
    for _ in 0..100 {
        let (par, st) = gb_parallel(&gens, 4).unwrap();
        assert_eq!(par, seq);
        puts.insert(st.put_count);
    }
    println!("put counts over 100 runs: {:?}", puts);
}

fn golden(name: &str) -> (Vec<Polynomial<RationalField>>, Arc<gb_core::PolyRing<RationalField>>) {
    let path = format!("{}/tests/data/{}", env!("CARGO_MANIFEST_DIR"), name);
    let sys = parse_system(&std::fs::read_to_string(path).unwrap()).unwrap();
    let ring = sys.ring.build(RationalField).unwrap();
    (sys.polynomials(&ring).unwrap(), ring)
}

fn generators(name: &str, ring: &Arc<gb_core::PolyRing<RationalField>>) -> Vec<Polynomial<RationalField>> {
    let sys = gb_core::systems::named(name).unwrap();
    let texts: Vec<String> = sys.lines().map(str::to_string).collect();
    texts.iter().map(|t| Polynomial::parse(ring, t).unwrap()).collect()
}

fn check_golden(file: &str, system: &str) {
    let (expected, ring) = golden(file);
    let gens = generators(system, &ring);
    let (seq, _) = gb_sequential(&gens).unwrap();
    // the oracle's listing order is its own; compare as canonical lists
    assert_eq!(seq, reduced_gb(&expected).unwrap(), "{}", file);
    assert_eq!(seq.len(), expected.len());
    assert_gb_properties(&gens, &seq);
    let (par, _) = gb_parallel(&gens, 3).unwrap();
    assert_eq!(par, seq);
}

#[test]
fn katsura3_grevlex_golden() {
    check_golden("katsura3_grevlex.txt", "katsura:3");
}

#[test]
fn katsura3_lex_golden() {
    check_golden("katsura3_lex.txt", "katsura:3");
}

#[test]
fn cyclic4_grevlex_golden() {
    check_golden("cyclic4_grevlex.txt", "cyclic:4");
}

#[test]
fn katsura3_mod_p_agrees_with_rational_basis() {
    // The rational basis has no denominator divisible by 32003, so it maps
    // to the modular basis coefficient-wise.
    let (expected, _) = golden("katsura3_grevlex.txt");
    let text = gb_core::systems::katsura(3).unwrap();
    let r = small_prime_ring(1, TermOrder::GradedRevLex);
    let mut desc = text.ring.clone();
    desc.field = r.field().descriptor();
    let ring = desc.build(r.field().clone()).unwrap();
    let (basis, _) = gb_sequential(&text.polynomials(&ring).unwrap()).unwrap();
    let mapped: Vec<_> = reduced_gb(&expected)
        .unwrap()
        .iter()
        .map(|p| Polynomial::parse(&ring, &p.to_string()).unwrap())
        .collect();
    assert_eq!(basis, mapped);
}
