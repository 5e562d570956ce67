//! Sequential Buchberger driver and reduced-basis canonicalization.

use std::sync::Arc;
use std::time::Instant;

use crate::arith::Field;
use crate::error::{GbError, Result};
use crate::pairs::{PairList, PairListConfig};
use crate::poly::{PolyRing, Polynomial};
use crate::reduce::{normal_form, reduce_s_polynomial};

/// Counters and timing of one run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GbStats {
    pub put_count: u64,
    pub rem_count: u64,
    pub zero_reductions: u64,
    pub wall_ms: f64,
    pub nodes: usize,
    pub threads_per_node: usize,
}

impl GbStats {
    pub fn from_pairs<F: Field>(pairs: &PairList<F>, start: Instant, nodes: usize, ppn: usize) -> Self {
        let st = pairs.stats();
        GbStats {
            put_count: st.put,
            rem_count: st.rem,
            zero_reductions: st.zero_reductions,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            nodes,
            threads_per_node: ppn,
        }
    }
}

/// A ring and its cleaned-up generators.
pub type Prepared<F> = (Arc<PolyRing<F>>, Vec<Polynomial<F>>);

/// Drops zeros, makes monic, removes duplicates, and checks that all
/// generators share one ring. `None` if nothing is left.
pub fn prepare_generators<F: Field>(gens: &[Polynomial<F>]) -> Result<Option<Prepared<F>>> {
    let Some(first) = gens.first() else { return Ok(None) };
    let ring = first.ring().clone();
    let mut out: Vec<Polynomial<F>> = Vec::with_capacity(gens.len());
    for g in gens {
        if !g.same_ring(first) {
            return Err(GbError::Config("generators belong to different rings".into()));
        }
        if g.is_zero() {
            continue;
        }
        let g = g.make_monic();
        if !out.contains(&g) {
            out.push(g);
        }
    }
    Ok((!out.is_empty()).then_some((ring, out)))
}

/// Gröbner basis of the ideal generated by `gens`, returned in reduced form.
pub fn gb_sequential<F: Field>(gens: &[Polynomial<F>]) -> Result<(Vec<Polynomial<F>>, GbStats)> {
    gb_sequential_with(gens, PairListConfig::default())
}

pub fn gb_sequential_with<F: Field>(
    gens: &[Polynomial<F>],
    config: PairListConfig,
) -> Result<(Vec<Polynomial<F>>, GbStats)> {
    let start = Instant::now();
    let Some((ring, gens)) = prepare_generators(gens)? else {
        return Ok((Vec::new(), GbStats::default()));
    };
    let pairs = PairList::new(&ring, config);
    for g in &gens {
        pairs.put(g)?;
    }
    let basis = pairs.basis();
    while let Some(pair) = pairs.remove_next() {
        let (a, b) = (basis.get(pair.i).unwrap(), basis.get(pair.j).unwrap());
        let r = reduce_s_polynomial(basis, &a, &b)?;
        pairs.complete(&pair, r)?;
    }
    let reduced = reduced_gb(&pairs.polynomials())?;
    Ok((reduced, GbStats::from_pairs(&pairs, start, 0, 0)))
}

/// The reduced Gröbner basis of the ideal spanned by the Gröbner basis
/// `basis`: minimal, inter-reduced, monic, sorted by descending head term.
pub fn reduced_gb<F: Field, P: AsRef<Polynomial<F>>>(basis: &[P]) -> Result<Vec<Polynomial<F>>> {
    let mut polys: Vec<Polynomial<F>> = basis
        .iter()
        .map(AsRef::as_ref)
        .filter(|p| !p.is_zero())
        .map(Polynomial::make_monic)
        .collect();
    let Some(first) = polys.first() else { return Ok(Vec::new()) };
    let order = first.ring().order();
    polys.sort_by(|a, b| order.cmp(a.lead_exp().unwrap(), b.lead_exp().unwrap()));
    let mut minimal: Vec<Polynomial<F>> = Vec::with_capacity(polys.len());
    for p in polys {
        let h = p.lead_exp().unwrap();
        if !minimal.iter().any(|q| q.lead_exp().unwrap().divides(h)) {
            minimal.push(p);
        }
    }
    let mut out = Vec::with_capacity(minimal.len());
    for (i, p) in minimal.iter().enumerate() {
        let others: Vec<&Polynomial<F>> =
            minimal.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, q)| q).collect();
        out.push(normal_form(&others, p)?);
    }
    out.reverse();
    Ok(out)
}
