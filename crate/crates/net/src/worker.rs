//! Reduction step shared by the distributed workers.

use gb_core::reduce::normal_form_restartable;
use gb_core::Field;

use crate::dht::DhtBasis;
use crate::error::Result;

/// Reduces the S-polynomial of entries `i` and `j` against the replicated
/// list. Returns the encoded remainder (`None` for zero) and the number of
/// restarts caused by arriving entries.
pub(crate) fn reduce_pair<F: Field>(basis: &DhtBasis<F>, i: u64, j: u64) -> Result<(Option<Vec<u8>>, usize)> {
    let a = basis.get_wait(i)?;
    let b = basis.get_wait(j)?;
    let s = a.s_polynomial(&b)?;
    if s.is_zero() {
        return Ok((None, 0));
    }
    let r = normal_form_restartable(basis, &s)?;
    if let Some(e) = basis.take_error() {
        return Err(e.into());
    }
    Ok(((!r.poly.is_zero()).then(|| r.poly.encode()), r.restarts))
}

/// What a worker node did during a run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WorkerReport {
    pub node: u32,
    pub threads: u32,
    pub pairs: u64,
    pub zero: u64,
    pub restarts: u64,
}

impl WorkerReport {
    pub fn summary(&self) -> String {
        format!(
            "node {} ({} threads): {} pairs, {} zero, {} restarts",
            self.node, self.threads, self.pairs, self.zero, self.restarts
        )
    }
}
