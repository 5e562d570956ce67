//! Shared-memory parallel Buchberger.
//!
//! Reducer threads take pairs from one [`PairList`], reduce against the
//! list's live view and put the results back. A thread that finds the
//! queue empty counts itself idle; the run ends once the queue is empty
//! and every thread is idle. [`drive_workers`] is the same loop with a
//! pluggable reduction step, which the distributed master reuses with
//! remote reducers behind it.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use crate::arith::Field;
use crate::error::{GbError, Result};
use crate::gb_seq::{prepare_generators, reduced_gb, GbStats};
use crate::pairs::{CriticalPair, PairList, PairListConfig};
use crate::poly::Polynomial;
use crate::reduce::reduce_s_polynomial;

const IDLE_POLL: Duration = Duration::from_millis(20);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParConfig {
    pub threads: usize,
    pub pairs: PairListConfig,
}

impl ParConfig {
    pub fn new(threads: usize) -> Self {
        ParConfig { threads, pairs: PairListConfig::default() }
    }
}

pub fn gb_parallel<F: Field>(gens: &[Polynomial<F>], threads: usize) -> Result<(Vec<Polynomial<F>>, GbStats)> {
    gb_parallel_with(gens, &ParConfig::new(threads))
}

pub fn gb_parallel_with<F: Field>(
    gens: &[Polynomial<F>],
    config: &ParConfig,
) -> Result<(Vec<Polynomial<F>>, GbStats)> {
    if config.threads == 0 {
        return Err(GbError::Config("at least one thread is required".into()));
    }
    let start = Instant::now();
    let Some((ring, gens)) = prepare_generators(gens)? else {
        return Ok((Vec::new(), GbStats { nodes: 1, threads_per_node: config.threads, ..Default::default() }));
    };
    let pairs = PairList::new(&ring, config.pairs);
    for g in &gens {
        pairs.put(g)?;
    }
    drive_workers(
        &pairs,
        config.threads,
        |_| {
            Ok(|pair: &CriticalPair| {
                let basis = pairs.basis();
                let (a, b) = (basis.get(pair.i).unwrap(), basis.get(pair.j).unwrap());
                reduce_s_polynomial(basis, &a, &b)
            })
        },
        |_| Ok(()),
    )?;
    let reduced = reduced_gb(&pairs.polynomials())?;
    Ok((reduced, GbStats::from_pairs(&pairs, start, 1, config.threads)))
}

/// Termination test run by a worker that has counted itself idle: the
/// queue is empty and every worker is idle.
pub fn termination_check<F: Field>(pairs: &PairList<F>, idle: &AtomicUsize, total: usize) -> bool {
    idle.load(Ordering::SeqCst) == total && !pairs.has_pending()
}

/// Runs `workers` threads over `pairs` until termination. `make_reducer`
/// builds each thread's reduction step (called on that thread); `publish`
/// sees every batch of polynomials that entered the list.
pub fn drive_workers<F, M, R, P>(pairs: &PairList<F>, workers: usize, make_reducer: M, publish: P) -> Result<()>
where
    F: Field,
    M: Fn(usize) -> Result<R> + Sync,
    R: FnMut(&CriticalPair) -> Result<Option<Polynomial<F>>>,
    P: Fn(&[(usize, Arc<Polynomial<F>>)]) -> Result<()> + Sync,
{
    let idle = AtomicUsize::new(0);
    let done = AtomicBool::new(false);
    let failure: Mutex<Option<GbError>> = Mutex::new(None);
    let fail = |e: GbError| {
        failure.lock().unwrap().get_or_insert(e);
        done.store(true, Ordering::SeqCst);
        pairs.wake_all();
    };
    thread::scope(|s| {
        for id in 0..workers {
            let (idle, done, fail, make_reducer, publish) = (&idle, &done, &fail, &make_reducer, &publish);
            s.spawn(move || {
                let mut reduce = match make_reducer(id) {
                    Ok(r) => r,
                    Err(e) => return fail(e),
                };
                let step = |pair: CriticalPair, reduce: &mut R| -> Result<()> {
                    let r = reduce(&pair)?;
                    let added = pairs.complete(&pair, r)?;
                    if !added.is_empty() {
                        publish(&added)?;
                    }
                    Ok(())
                };
                while !done.load(Ordering::SeqCst) {
                    if let Some(pair) = pairs.remove_next() {
                        if let Err(e) = step(pair, &mut reduce) {
                            return fail(e);
                        }
                        continue;
                    }
                    idle.fetch_add(1, Ordering::SeqCst);
                    loop {
                        if done.load(Ordering::SeqCst) {
                            return;
                        }
                        if termination_check(pairs, idle, workers) {
                            done.store(true, Ordering::SeqCst);
                            pairs.wake_all();
                            return;
                        }
                        if pairs.has_pending() {
                            idle.fetch_sub(1, Ordering::SeqCst);
                            break;
                        }
                        pairs.wait_for_work(IDLE_POLL);
                    }
                }
            });
        }
    });
    match failure.into_inner().unwrap() {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::RationalField;
    use crate::gb_seq::gb_sequential;
    use crate::poly::{PolyRing, TermOrder};

    type Q = RationalField;

    fn ring() -> Arc<PolyRing<Q>> {
        PolyRing::new(vec!["x".into(), "y".into(), "z".into()], RationalField, TermOrder::GradedRevLex).unwrap()
    }

    fn ps(r: &Arc<PolyRing<Q>>, s: &[&str]) -> Vec<Polynomial<Q>> {
        s.iter().map(|t| Polynomial::parse(r, t).unwrap()).collect()
    }

    #[test]
    fn single_thread_empty_queue_terminates() {
        let r = ring();
        let pl = PairList::new(&r, PairListConfig::default());
        let idle = AtomicUsize::new(1);
        assert!(termination_check(&pl, &idle, 1));
    }

    #[test]
    fn busy_peer_blocks_termination() {
        let r = ring();
        let pl = PairList::new(&r, PairListConfig::default());
        pl.put(&Polynomial::parse(&r, "x^2 + y").unwrap()).unwrap();
        pl.put(&Polynomial::parse(&r, "x*y + z").unwrap()).unwrap();
        let held = pl.remove_next().unwrap();
        let idle = AtomicUsize::new(1);
        // one of two threads idle, the other holds `held`
        assert!(!termination_check(&pl, &idle, 2));
        let added = pl.complete(&held, Some(Polynomial::parse(&r, "x*z - y^2").unwrap())).unwrap();
        assert_eq!(added.len(), 1);
        assert!(pl.has_pending());
        idle.fetch_add(1, Ordering::SeqCst);
        assert!(!termination_check(&pl, &idle, 2));
    }

    #[test]
    fn delayed_peer_result_resumes_idle_thread() {
        // Only one pair exists at the start, so one thread goes idle while
        // the other is held inside its reduction. The held result is
        // nonzero and creates the rest of the work.
        let r = ring();
        let gens = ps(&r, &["x^2 + y", "x*y + z"]);
        let pl = PairList::new(&r, PairListConfig::default());
        for g in &gens {
            pl.put(g).unwrap();
        }
        let first = AtomicBool::new(true);
        let handled = Mutex::new(Vec::new());
        drive_workers(
            &pl,
            2,
            |id| {
                let (pl, first, handled) = (&pl, &first, &handled);
                Ok(move |pair: &CriticalPair| {
                    handled.lock().unwrap().push(id);
                    if first.swap(false, Ordering::SeqCst) {
                        thread::sleep(Duration::from_millis(150));
                    }
                    let basis = pl.basis();
                    let (a, b) = (basis.get(pair.i).unwrap(), basis.get(pair.j).unwrap());
                    reduce_s_polynomial(basis, &a, &b)
                })
            },
            |_| Ok(()),
        )
        .unwrap();
        let (seq, _) = gb_sequential(&gens).unwrap();
        assert_eq!(reduced_gb(&pl.polynomials()).unwrap(), seq);
        assert!(handled.lock().unwrap().len() > 1);
        assert!(!pl.has_pending());
    }

    #[test]
    fn matches_sequential() {
        let r = ring();
        let gens = ps(&r, &["x^2 + y*z - 1", "x*y - z^2 + x", "y^2*z + x - 2"]);
        let (seq, _) = gb_sequential(&gens).unwrap();
        for threads in [1, 2, 4] {
            let (par, st) = gb_parallel(&gens, threads).unwrap();
            assert_eq!(par, seq, "threads = {}", threads);
            assert_eq!(st.threads_per_node, threads);
        }
    }

    #[test]
    fn zero_threads_rejected() {
        let r = ring();
        assert!(gb_parallel(&ps(&r, &["x"]), 0).is_err());
    }

    #[test]
    fn reducer_error_stops_all_workers() {
        let r = ring();
        let pl = PairList::new(&r, PairListConfig::default());
        for g in ps(&r, &["x^2 + y", "x*y + z", "y^2 + x"]) {
            pl.put(&g).unwrap();
        }
        let out = drive_workers(
            &pl,
            3,
            |_| Ok(|_: &CriticalPair| Err(GbError::Worker("boom".into()))),
            |_| Ok(()),
        );
        assert_eq!(out, Err(GbError::Worker("boom".into())));
    }
}
