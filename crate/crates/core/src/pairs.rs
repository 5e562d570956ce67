//! The critical-pair work queue.
//!
//! [`PairList`] owns the append-only polynomial list and the pending
//! critical pairs. All operations take one internal lock, so it can be
//! shared between reducer threads. `remove_next` never blocks: an empty
//! queue yields `None`, which the termination protocols rely on.
//!
//! Buchberger's product criterion is applied when pairs are created, the
//! chain criterion when they are removed. Only pairs that survive both
//! are handed out and counted in `rem`.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex, MutexGuard, RwLock};
use std::time::Duration;

use smallvec::SmallVec;

use crate::arith::Field;
use crate::error::{GbError, Result};
use crate::poly::{ExpVec, PolyRing, Polynomial};
use crate::reduce::BasisView;

/// Order in which pending pairs are handed out.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PairOrder {
    /// Smallest lcm under the term order first; ties per [`TieBreak`].
    #[default]
    HeadTerm,
    /// Creation order.
    Sequence,
}

/// Which of several pairs with equal lcm goes first under
/// [`PairOrder::HeadTerm`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TieBreak {
    /// Most recently created first.
    #[default]
    NewestFirst,
    OldestFirst,
}

/// When a finished reduction result is added to the polynomial list.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Selection {
    /// As soon as it is reported.
    #[default]
    GreedyFirstFinished,
    /// In the order in which the pairs were handed out.
    SequentialOrder,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairListConfig {
    pub order: PairOrder,
    pub ties: TieBreak,
    pub selection: Selection,
    /// Disable only to cross-check the criteria.
    pub criteria: bool,
}

impl Default for PairListConfig {
    fn default() -> Self {
        PairListConfig {
            order: PairOrder::HeadTerm,
            ties: TieBreak::NewestFirst,
            selection: Selection::GreedyFirstFinished,
            criteria: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CriticalPair {
    pub i: usize,
    pub j: usize,
    pub lcm: ExpVec,
    /// Creation sequence number.
    pub seq: u64,
    /// Position in the hand-out sequence.
    rank: u64,
}

/// Counters beyond `put`/`rem`, for invariant checks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PairStats {
    pub put: u64,
    pub rem: u64,
    pub created: u64,
    pub product_discarded: u64,
    pub chain_discarded: u64,
    pub zero_reductions: u64,
    pub pending: u64,
}

/// The polynomial list as seen by reducers: append-only, versioned.
pub struct SharedBasis<F: Field> {
    list: RwLock<Vec<Arc<Polynomial<F>>>>,
    version: AtomicU64,
}

impl<F: Field> SharedBasis<F> {
    fn new() -> Self {
        SharedBasis { list: RwLock::new(Vec::new()), version: AtomicU64::new(0) }
    }

    fn publish(&self, p: Arc<Polynomial<F>>) {
        let mut list = self.list.write().unwrap();
        list.push(p);
        self.version.fetch_add(1, Ordering::SeqCst);
    }

    pub fn get(&self, i: usize) -> Option<Arc<Polynomial<F>>> {
        self.list.read().unwrap().get(i).cloned()
    }

    pub fn len(&self) -> usize {
        self.list.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<F: Field> BasisView<F> for SharedBasis<F> {
    fn version(&self) -> u64 {
        self.version.load(Ordering::SeqCst)
    }

    fn snapshot(&self) -> (u64, Vec<Arc<Polynomial<F>>>) {
        let list = self.list.read().unwrap();
        (self.version.load(Ordering::SeqCst), list.clone())
    }
}

type PairKey = (SmallVec<[i32; 13]>, u64);

struct State<F: Field> {
    heads: Vec<ExpVec>,
    pending: BTreeMap<PairKey, CriticalPair>,
    // live[j][i]: pair (i, j) was created and not yet removed.
    live: Vec<Vec<bool>>,
    next_seq: u64,
    stats: PairStats,
    next_commit: u64,
    parked: BTreeMap<u64, Option<Polynomial<F>>>,
}

pub struct PairList<F: Field> {
    ring: Arc<PolyRing<F>>,
    config: PairListConfig,
    state: Mutex<State<F>>,
    work: Condvar,
    basis: SharedBasis<F>,
}

impl<F: Field> PairList<F> {
    pub fn new(ring: &Arc<PolyRing<F>>, config: PairListConfig) -> Self {
        PairList {
            ring: ring.clone(),
            config,
            state: Mutex::new(State {
                heads: Vec::new(),
                pending: BTreeMap::new(),
                live: Vec::new(),
                next_seq: 0,
                stats: PairStats::default(),
                next_commit: 0,
                parked: BTreeMap::new(),
            }),
            work: Condvar::new(),
            basis: SharedBasis::new(),
        }
    }

    pub fn ring(&self) -> &Arc<PolyRing<F>> {
        &self.ring
    }

    pub fn config(&self) -> PairListConfig {
        self.config
    }

    fn lock(&self) -> MutexGuard<'_, State<F>> {
        self.state.lock().unwrap()
    }

    /// Appends `p` (made monic) and creates its pairs with every earlier
    /// polynomial. Returns the new index.
    pub fn put(&self, p: &Polynomial<F>) -> Result<usize> {
        let mut st = self.lock();
        let (idx, _) = self.put_locked(&mut st, p)?;
        drop(st);
        self.work.notify_all();
        Ok(idx)
    }

    fn put_locked(&self, st: &mut State<F>, p: &Polynomial<F>) -> Result<(usize, Arc<Polynomial<F>>)> {
        if p.is_zero() {
            return Err(GbError::Precondition("zero polynomial put to pair list"));
        }
        if !Arc::ptr_eq(p.ring(), &self.ring) && **p.ring() != *self.ring {
            return Err(GbError::RingMismatch);
        }
        let p = Arc::new(p.make_monic());
        let head = p.lead_exp().expect("nonzero").clone();
        let idx = st.heads.len();
        let order = self.ring.order();
        let mut live = vec![false; idx];
        for (k, hk) in st.heads.iter().enumerate() {
            if self.config.criteria && hk.is_coprime(&head) {
                st.stats.product_discarded += 1;
                continue;
            }
            let lcm = hk.lcm(&head);
            let seq = st.next_seq;
            st.next_seq += 1;
            let key = match self.config.order {
                PairOrder::HeadTerm => {
                    let tie = match self.config.ties {
                        TieBreak::NewestFirst => u64::MAX - seq,
                        TieBreak::OldestFirst => seq,
                    };
                    (order.sort_key(&lcm), tie)
                }
                PairOrder::Sequence => (SmallVec::new(), seq),
            };
            st.pending.insert(key, CriticalPair { i: k, j: idx, lcm, seq, rank: 0 });
            live[k] = true;
            st.stats.created += 1;
        }
        st.live.push(live);
        st.heads.push(head);
        st.stats.put += 1;
        self.basis.publish(p.clone());
        Ok((idx, p))
    }

    fn is_live(st: &State<F>, a: usize, b: usize) -> bool {
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        st.live[j][i]
    }

    /// Chain criterion: some other head divides the lcm and both pairs
    /// linking it to `i` and `j` are already gone from the queue.
    fn chain_redundant(st: &State<F>, pair: &CriticalPair) -> bool {
        st.heads.iter().enumerate().any(|(k, hk)| {
            k != pair.i
                && k != pair.j
                && hk.divides(&pair.lcm)
                && !Self::is_live(st, pair.i, k)
                && !Self::is_live(st, pair.j, k)
        })
    }

    /// Hands out the next pair, or `None` if no pair is pending. Never
    /// blocks.
    pub fn remove_next(&self) -> Option<CriticalPair> {
        let mut st = self.lock();
        while let Some((_, mut pair)) = st.pending.pop_first() {
            let redundant = self.config.criteria && Self::chain_redundant(&st, &pair);
            st.live[pair.j][pair.i] = false;
            if redundant {
                st.stats.chain_discarded += 1;
                continue;
            }
            pair.rank = st.stats.rem;
            st.stats.rem += 1;
            return Some(pair);
        }
        None
    }

    /// Records the reduction result of a handed-out pair: `None` for a zero
    /// remainder. Returns the polynomials that entered the list because of
    /// this call (under sequential-order selection, results wait until all
    /// earlier pairs have reported).
    pub fn complete(
        &self,
        pair: &CriticalPair,
        result: Option<Polynomial<F>>,
    ) -> Result<Vec<(usize, Arc<Polynomial<F>>)>> {
        let result = result.filter(|p| !p.is_zero());
        let mut st = self.lock();
        if result.is_none() {
            st.stats.zero_reductions += 1;
        }
        let mut added = Vec::new();
        match self.config.selection {
            Selection::GreedyFirstFinished => {
                if let Some(p) = result {
                    added.push(self.put_locked(&mut st, &p)?);
                }
            }
            Selection::SequentialOrder => {
                st.parked.insert(pair.rank, result);
                loop {
                    let next = st.next_commit;
                    let Some(r) = st.parked.remove(&next) else { break };
                    st.next_commit += 1;
                    if let Some(p) = r {
                        added.push(self.put_locked(&mut st, &p)?);
                    }
                }
            }
        }
        drop(st);
        if !added.is_empty() {
            self.work.notify_all();
        }
        Ok(added)
    }

    pub fn has_pending(&self) -> bool {
        !self.lock().pending.is_empty()
    }

    /// `(put, rem)`.
    pub fn counters(&self) -> (u64, u64) {
        let st = self.lock();
        (st.stats.put, st.stats.rem)
    }

    pub fn stats(&self) -> PairStats {
        let st = self.lock();
        PairStats { pending: st.pending.len() as u64, ..st.stats }
    }

    pub fn len(&self) -> usize {
        self.lock().heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn basis(&self) -> &SharedBasis<F> {
        &self.basis
    }

    pub fn polynomials(&self) -> Vec<Arc<Polynomial<F>>> {
        self.basis.snapshot().1
    }

    /// Blocks until a pair is pending, [`PairList::wake_all`] is called, or
    /// the timeout passes.
    pub fn wait_for_work(&self, timeout: Duration) {
        let st = self.lock();
        if st.pending.is_empty() {
            let _unused = self.work.wait_timeout(st, timeout).unwrap();
        }
    }

    pub fn wake_all(&self) {
        let _st = self.lock();
        self.work.notify_all();
    }
}
