//! Normal forms.
//!
//! [`normal_form`] fully reduces a polynomial against a fixed list.
//! [`normal_form_restartable`] reduces against a list that other threads
//! (or a network receiver) may extend while the reduction runs: after every
//! head-term elimination the view's version counter is re-read, and if it
//! moved the reduction starts over from the original polynomial against
//! the newer list.

use std::ops::ControlFlow;
use std::sync::Arc;

use crate::arith::Field;
use crate::error::Result;
use crate::poly::{ExpVec, Polynomial, Term, TermOrder};

/// A growing polynomial list with a monotone version counter.
///
/// `snapshot` must return a consistent pair: the list as it was when the
/// returned version was current.
pub trait BasisView<F: Field> {
    fn version(&self) -> u64;
    fn snapshot(&self) -> (u64, Vec<Arc<Polynomial<F>>>);
}

/// Result of a restartable reduction.
#[derive(Clone, Debug)]
pub struct Reduced<F: Field> {
    pub poly: Polynomial<F>,
    /// Number of times the reduction started over.
    pub restarts: usize,
    /// Version of the list the final pass ran against.
    pub version: u64,
}

/// Full reduction of `p` modulo `basis`; divisors are tried in list order.
pub fn normal_form<F: Field, P: AsRef<Polynomial<F>>>(
    basis: &[P],
    p: &Polynomial<F>,
) -> Result<Polynomial<F>> {
    let r = reduce_kernel(basis, p, |_, _, _| ControlFlow::Continue(()))?;
    Ok(r.expect("kernel only stops early on request"))
}

/// Like [`normal_form`], also returning cofactors `q` with
/// `p = sum(q[i] * basis[i]) + r`.
pub fn normal_form_with_cofactors<F: Field, P: AsRef<Polynomial<F>>>(
    basis: &[P],
    p: &Polynomial<F>,
) -> Result<(Polynomial<F>, Vec<Polynomial<F>>)> {
    let ring = p.ring().clone();
    let mut steps: Vec<Vec<Term<F>>> = vec![Vec::new(); basis.len()];
    let r = reduce_kernel(basis, p, |i, c, shift| {
        steps[i].push((shift.clone(), c.clone()));
        ControlFlow::Continue(())
    })?
    .expect("kernel only stops early on request");
    let cofactors = steps
        .into_iter()
        .map(|terms| Polynomial::from_terms(&ring, terms))
        .collect::<Result<Vec<_>>>()?;
    Ok((r, cofactors))
}

/// Reduction against a concurrently growing list; see the module docs.
pub fn normal_form_restartable<F: Field, V: BasisView<F> + ?Sized>(
    view: &V,
    p: &Polynomial<F>,
) -> Result<Reduced<F>> {
    let mut restarts = 0;
    loop {
        let (version, basis) = view.snapshot();
        let outcome = reduce_kernel(&basis, p, |_, _, _| {
            if view.version() == version {
                ControlFlow::Continue(())
            } else {
                ControlFlow::Break(())
            }
        })?;
        match outcome {
            Some(poly) => return Ok(Reduced { poly, restarts, version }),
            None => restarts += 1,
        }
    }
}

/// Normal form of the S-polynomial of `a` and `b` against the live view;
/// `None` for a zero remainder.
pub fn reduce_s_polynomial<F: Field, V: BasisView<F> + ?Sized>(
    view: &V,
    a: &Polynomial<F>,
    b: &Polynomial<F>,
) -> Result<Option<Polynomial<F>>> {
    let s = a.s_polynomial(b)?;
    if s.is_zero() {
        return Ok(None);
    }
    let r = normal_form_restartable(view, &s)?.poly;
    Ok((!r.is_zero()).then_some(r))
}

/// Shared reduction loop. `after_step` sees the basis index, the
/// coefficient and the monomial shift of each elimination and may stop the
/// reduction, in which case `None` is returned.
fn reduce_kernel<F: Field, P: AsRef<Polynomial<F>>>(
    basis: &[P],
    p: &Polynomial<F>,
    mut after_step: impl FnMut(usize, &F::Elem, &ExpVec) -> ControlFlow<()>,
) -> Result<Option<Polynomial<F>>> {
    let ring = p.ring();
    let field = ring.field();
    let order = ring.order();
    let mut heads: Vec<(usize, &ExpVec, &F::Elem)> = Vec::with_capacity(basis.len());
    for (i, b) in basis.iter().enumerate() {
        let b = b.as_ref();
        p.check_ring(b)?;
        if let Some((e, c)) = b.leading() {
            heads.push((i, e, c));
        }
    }
    let mut rest = GeoBucket::new(order);
    rest.add(field, p.terms().iter().rev().cloned().collect());
    let mut done: Vec<Term<F>> = Vec::new();
    while let Some((e, a)) = rest.pop_leading(field) {
        let Some(&(idx, he, hc)) = heads.iter().find(|(_, he, _)| he.divides(&e)) else {
            done.push((e, a));
            continue;
        };
        let factor = if field.is_one(hc) { a } else { field.div(&a, hc)? };
        let shift = he.quotient_of(&e).expect("divisor found");
        let neg = field.neg(&factor);
        let tail = &basis[idx].as_ref().terms()[1..];
        let mut scaled = Vec::with_capacity(tail.len());
        for (te, tc) in tail.iter().rev() {
            scaled.push((te.checked_add(&shift)?, field.mul(tc, &neg)));
        }
        rest.add(field, scaled);
        if after_step(idx, &factor, &shift).is_break() {
            return Ok(None);
        }
    }
    Ok(Some(Polynomial::from_sorted(ring.clone(), done)))
}

/// A sum of polynomials kept in buckets of geometrically growing length
/// so that adding a polynomial costs amortized logarithmic merges instead
/// of a pass over the whole sum. Each bucket is sorted ascending, so its
/// leading term is the last element.
struct GeoBucket<F: Field> {
    order: TermOrder,
    buckets: Vec<Vec<Term<F>>>,
}

impl<F: Field> GeoBucket<F> {
    fn new(order: TermOrder) -> Self {
        GeoBucket { order, buckets: Vec::new() }
    }

    fn capacity(level: usize) -> usize {
        4usize << (2 * level)
    }

    /// Adds terms sorted ascending, without zero coefficients.
    fn add(&mut self, field: &F, mut terms: Vec<Term<F>>) {
        let mut level = 0;
        while terms.len() > Self::capacity(level) {
            level += 1;
        }
        loop {
            if self.buckets.len() <= level {
                self.buckets.resize_with(level + 1, Vec::new);
            }
            let current = std::mem::take(&mut self.buckets[level]);
            terms = merge_ascending(self.order, field, current, terms);
            if terms.len() <= Self::capacity(level) {
                self.buckets[level] = terms;
                return;
            }
            level += 1;
        }
    }

    fn pop_leading(&mut self, field: &F) -> Option<Term<F>> {
        loop {
            let mut best: Option<usize> = None;
            for (i, b) in self.buckets.iter().enumerate() {
                let Some((e, _)) = b.last() else { continue };
                match best {
                    Some(j) if !self.order.cmp(e, &self.buckets[j].last().unwrap().0).is_gt() => {}
                    _ => best = Some(i),
                }
            }
            let best = best?;
            let (e, mut c) = self.buckets[best].pop().unwrap();
            for i in 0..self.buckets.len() {
                if i != best && self.buckets[i].last().is_some_and(|(f, _)| *f == e) {
                    let (_, d) = self.buckets[i].pop().unwrap();
                    c = field.add(&c, &d);
                }
            }
            if !field.is_zero(&c) {
                return Some((e, c));
            }
        }
    }
}

fn merge_ascending<F: Field>(order: TermOrder, field: &F, a: Vec<Term<F>>, b: Vec<Term<F>>) -> Vec<Term<F>> {
    if a.is_empty() {
        return b;
    }
    if b.is_empty() {
        return a;
    }
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut ai = a.into_iter().peekable();
    let mut bi = b.into_iter().peekable();
    loop {
        let ord = match (ai.peek(), bi.peek()) {
            (Some((x, _)), Some((y, _))) => order.cmp(x, y),
            (Some(_), None) => {
                out.extend(ai);
                break;
            }
            (None, _) => {
                out.extend(bi);
                break;
            }
        };
        match ord {
            std::cmp::Ordering::Less => out.push(ai.next().unwrap()),
            std::cmp::Ordering::Greater => out.push(bi.next().unwrap()),
            std::cmp::Ordering::Equal => {
                let (e, x) = ai.next().unwrap();
                let (_, y) = bi.next().unwrap();
                let s = field.add(&x, &y);
                if !field.is_zero(&s) {
                    out.push((e, s));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::RationalField;
    use crate::poly::{PolyRing, TermOrder};
    use std::cell::Cell;

    type Q = RationalField;

    fn ring() -> Arc<PolyRing<Q>> {
        PolyRing::new(vec!["x".into(), "y".into(), "z".into()], RationalField, TermOrder::GradedRevLex)
            .unwrap()
    }

    fn p(r: &Arc<PolyRing<Q>>, s: &str) -> Polynomial<Q> {
        Polynomial::parse(r, s).unwrap()
    }

    #[test]
    fn empty_basis_is_identity() {
        let r = ring();
        let f = p(&r, "x^2 + y");
        assert_eq!(normal_form::<Q, Polynomial<Q>>(&[], &f).unwrap(), f);
    }

    #[test]
    fn single_division() {
        let r = ring();
        assert_eq!(normal_form(&[p(&r, "x")], &p(&r, "x^2 + y")).unwrap(), p(&r, "y"));
    }

    #[test]
    fn hand_computed_reduction() {
        let r = ring();
        // -x*y^2 -> (+y*(x*y + y^2)) -> y^3, then nothing divides y^3.
        let basis = [p(&r, "x*y + y^2"), p(&r, "x^2")];
        assert_eq!(normal_form(&basis, &p(&r, "-x*y^2")).unwrap(), p(&r, "y^3"));
    }

    #[test]
    fn reduces_non_monic_divisors_and_tails() {
        let r = ring();
        let basis = [p(&r, "2*y - 1")];
        // x*y^2 + y -> 1/4*x + 1/2
        assert_eq!(normal_form(&basis, &p(&r, "x*y^2 + y")).unwrap(), p(&r, "1/4*x + 1/2"));
    }

    #[test]
    fn cofactors_reconstruct_input() {
        let r = ring();
        let basis = [p(&r, "x*y - z"), p(&r, "y^2 - x"), p(&r, "2*z^2 + x")];
        let f = p(&r, "x^3*y^2 + 3*x*y*z - z^3 + y^4");
        let (rem, q) = normal_form_with_cofactors(&basis, &f).unwrap();
        let mut sum = rem.clone();
        for (qi, bi) in q.iter().zip(&basis) {
            sum = sum.add(&qi.mul(bi).unwrap()).unwrap();
        }
        assert_eq!(sum, f);
        for (e, _) in rem.terms() {
            assert!(basis.iter().all(|b| !b.lead_exp().unwrap().divides(e)));
        }
    }

    /// A list that grows by a scripted element once `reads` version reads
    /// have happened.
    struct ScriptedView {
        base: Vec<Arc<Polynomial<Q>>>,
        extra: Arc<Polynomial<Q>>,
        grow_after: usize,
        reads: Cell<usize>,
    }

    impl ScriptedView {
        fn grown(&self) -> bool {
            self.reads.get() >= self.grow_after
        }
    }

    impl BasisView<Q> for ScriptedView {
        fn version(&self) -> u64 {
            self.reads.set(self.reads.get() + 1);
            self.grown() as u64
        }
        fn snapshot(&self) -> (u64, Vec<Arc<Polynomial<Q>>>) {
            let mut list = self.base.clone();
            if self.grown() {
                list.push(self.extra.clone());
            }
            (self.grown() as u64, list)
        }
    }

    #[test]
    fn stable_view_matches_plain_reduction() {
        let r = ring();
        let base = vec![Arc::new(p(&r, "x*y - z")), Arc::new(p(&r, "y^2 - 1"))];
        let f = p(&r, "x*y^3 + z^2");
        let view = ScriptedView {
            base: base.clone(),
            extra: Arc::new(p(&r, "z")),
            grow_after: usize::MAX,
            reads: Cell::new(0),
        };
        let out = normal_form_restartable(&view, &f).unwrap();
        assert_eq!(out.poly, normal_form(&base, &f).unwrap());
        assert_eq!(out.restarts, 0);
    }

    #[test]
    fn growth_mid_reduction_restarts_and_uses_new_element() {
        let r = ring();
        let base = vec![Arc::new(p(&r, "x*y - z")), Arc::new(p(&r, "y^2 - 1"))];
        let f = p(&r, "x*y^3 + z^2");
        let plain = normal_form(&base, &f).unwrap();
        assert!(plain.terms().iter().any(|(e, _)| e.as_slice()[2] > 0));
        let view = ScriptedView {
            base: base.clone(),
            extra: Arc::new(p(&r, "z")),
            grow_after: 1,
            reads: Cell::new(0),
        };
        let out = normal_form_restartable(&view, &f).unwrap();
        assert_eq!(out.restarts, 1);
        assert_eq!(out.version, 1);
        let mut full = base.clone();
        full.push(Arc::new(p(&r, "z")));
        assert_eq!(out.poly, normal_form(&full, &f).unwrap());
        assert!(out.poly.terms().iter().all(|(e, _)| e.as_slice()[2] == 0));
    }

    #[test]
    fn irrelevant_growth_gives_same_result() {
        let r = ring();
        let base = vec![Arc::new(p(&r, "x*y - z")), Arc::new(p(&r, "y^2 - 1"))];
        let f = p(&r, "x*y^3 + z^2");
        let view = ScriptedView {
            base: base.clone(),
            // head x^5 divides nothing that occurs during this reduction
            extra: Arc::new(p(&r, "x^5 + 1")),
            grow_after: 1,
            reads: Cell::new(0),
        };
        let out = normal_form_restartable(&view, &f).unwrap();
        assert_eq!(out.poly, normal_form(&base, &f).unwrap());
        assert!(out.restarts <= 1);
    }
}
