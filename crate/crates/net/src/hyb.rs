//! Distributed hybrid Buchberger: several reducer threads per node sharing
//! one tagged connection to the master.
//!
//! Per node the master runs a server thread answering REQUEST messages and
//! a receiver thread consuming RESULT messages. A reducer thread asks for
//! a pair only after its previous result was acknowledged, and the master
//! acknowledges a result only after recording it, so the in-flight count
//! bounds the work still unknown to the pair queue. Requests that arrive
//! while the queue is empty but results are in flight are parked.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use gb_core::{reduced_gb, with_field, CriticalPair, Field, GbError, GbStats, PairList, PolyRing, Polynomial};

use crate::channel::{ChannelTag, TaggedChannel};
use crate::dht::{DhtBasis, DhtClient, DhtMaster};
use crate::error::{NetError, Result};
use crate::exec::{JobDescriptor, CONNECT_TIMEOUT};
use crate::master::{seed, MasterConfig, MasterEndpoint, Node, NodeReport, RunReport, HELLO_TAG};
use crate::msg::Msg;
use crate::worker::{reduce_pair, WorkerReport};

const POLL: Duration = Duration::from_millis(20);

/// Node-level tag carrying REQUEST messages.
pub fn request_tag(node: u32) -> ChannelTag {
    (node as u64) << 32 | 1
}

/// Node-level tag carrying RESULT messages.
pub fn result_tag(node: u32) -> ChannelTag {
    (node as u64) << 32 | 2
}

/// Per-thread tag carrying PAIR and TERM messages.
pub fn pair_tag(node: u32, thread: u32) -> ChannelTag {
    (node as u64) << 32 | (2 * thread as u64 + 16)
}

/// Per-thread tag carrying ACK messages.
pub fn ack_tag(node: u32, thread: u32) -> ChannelTag {
    pair_tag(node, thread) + 1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ThreadState {
    Idle,
    Holding(u64),
    Terminated,
}

#[derive(Debug, PartialEq, Eq)]
pub enum Acquire {
    Pair(CriticalPair),
    /// Queue empty but results outstanding.
    Wait,
    Done,
}

struct LedgerState {
    in_flight: usize,
    done: bool,
    failure: Option<String>,
    outstanding: HashMap<u64, (CriticalPair, u32, u32)>,
    threads: HashMap<(u32, u32), ThreadState>,
}

/// Master bookkeeping of handed-out pairs across all nodes; the in-flight
/// count is the distributed idle counter.
pub struct Ledger {
    state: Mutex<LedgerState>,
}

impl Ledger {
    pub fn new() -> Self {
        Ledger {
            state: Mutex::new(LedgerState {
                in_flight: 0,
                done: false,
                failure: None,
                outstanding: HashMap::new(),
                threads: HashMap::new(),
            }),
        }
    }

    /// Answers a REQUEST from `(node, thread)`: a pair, a reason to wait,
    /// or termination. Terminates only when the queue is empty and nothing
    /// is in flight, both read under one lock.
    pub fn acquire<F: Field>(&self, pairs: &PairList<F>, node: u32, thread: u32) -> Result<Acquire> {
        let mut st = self.state.lock().unwrap();
        if let Some(f) = &st.failure {
            return Err(NetError::Distributed(f.clone()));
        }
        let ts = *st.threads.entry((node, thread)).or_insert(ThreadState::Idle);
        if ts != ThreadState::Idle {
            return Err(NetError::protocol(format!("REQUEST from node {node} thread {thread} in state {ts:?}")));
        }
        if st.done {
            st.threads.insert((node, thread), ThreadState::Terminated);
            return Ok(Acquire::Done);
        }
        if let Some(p) = pairs.remove_next() {
            st.in_flight += 1;
            st.outstanding.insert(p.seq, (p.clone(), node, thread));
            st.threads.insert((node, thread), ThreadState::Holding(p.seq));
            return Ok(Acquire::Pair(p));
        }
        if st.in_flight == 0 && !pairs.has_pending() {
            st.done = true;
            st.threads.insert((node, thread), ThreadState::Terminated);
            return Ok(Acquire::Done);
        }
        Ok(Acquire::Wait)
    }

    /// Looks up the pair a RESULT refers to.
    pub fn pair_for(&self, node: u32, thread: u32, seq: u64) -> Result<CriticalPair> {
        let st = self.state.lock().unwrap();
        match st.outstanding.get(&seq) {
            Some((p, n, t)) if (*n, *t) == (node, thread) => Ok(p.clone()),
            _ => Err(NetError::protocol(format!("unexpected RESULT {seq} from node {node} thread {thread}"))),
        }
    }

    /// Called once the result of `seq` is recorded, right before its ACK
    /// goes out: the thread may request again as soon as the ACK arrives.
    pub fn release(&self, seq: u64) {
        let mut st = self.state.lock().unwrap();
        if let Some(&(_, n, t)) = st.outstanding.get(&seq) {
            st.threads.insert((n, t), ThreadState::Idle);
        }
    }

    /// Called after the ACK for `seq` was sent.
    pub fn finish(&self, seq: u64) {
        let mut st = self.state.lock().unwrap();
        if st.outstanding.remove(&seq).is_some() {
            st.in_flight -= 1;
        }
    }

    pub fn fail(&self, msg: String) {
        let mut st = self.state.lock().unwrap();
        st.failure.get_or_insert(msg);
        st.done = true;
    }

    pub fn failure(&self) -> Option<String> {
        self.state.lock().unwrap().failure.clone()
    }

    pub fn in_flight(&self) -> usize {
        self.state.lock().unwrap().in_flight
    }

    pub fn is_done(&self) -> bool {
        self.state.lock().unwrap().done
    }
}

impl Default for Ledger {
    fn default() -> Self {
        Self::new()
    }
}

/// Runs the master side against `nodes` hybrid worker nodes.
pub fn gb_hybrid_master<F: Field>(
    mut endpoint: MasterEndpoint,
    gens: &[Polynomial<F>],
    nodes: usize,
    config: &MasterConfig,
) -> Result<(Vec<Polynomial<F>>, RunReport)> {
    if nodes == 0 {
        return Err(GbError::Config("at least one worker node is required".into()).into());
    }
    let (conns, counter) = endpoint.accept_nodes(nodes, config)?;
    endpoint.dht().wait_for_clients(nodes, config.accept_timeout)?;
    let start = Instant::now();
    let ledger = Ledger::new();
    let sent: Vec<AtomicU64> = conns.iter().map(|_| AtomicU64::new(0)).collect();
    let (nonzero, zero) = (AtomicU64::new(0), AtomicU64::new(0));
    let outcome = seed(gens, config.pairs, endpoint.dht()).and_then(|pairs| {
        let Some(pairs) = pairs else {
            terminate_idle(&conns)?;
            return Ok(None);
        };
        serve_all(&conns, &pairs, &ledger, endpoint.dht(), &sent, &nonzero, &zero)?;
        Ok(Some(pairs))
    });
    if outcome.is_err() {
        conns.iter().for_each(|n| n.channel.close());
    }
    endpoint.dht_mut().shutdown();
    let control_connections = counter.finish();
    let pairs = outcome?;
    let ppn = conns.iter().map(|n| n.threads as usize).max().unwrap_or(0);
    let (basis, stats) = match &pairs {
        Some(p) => (reduced_gb(&p.polynomials())?, GbStats::from_pairs(p, start, nodes, ppn)),
        None => (Vec::new(), GbStats { nodes, threads_per_node: ppn, ..Default::default() }),
    };
    let report = RunReport {
        stats,
        nodes: conns
            .iter()
            .zip(&sent)
            .map(|(n, s)| NodeReport {
                node: n.node,
                threads: n.threads,
                channel: n.channel.stats(),
                pairs_sent: s.load(Ordering::Relaxed),
            })
            .collect(),
        control_connections,
        dht_links: endpoint.dht().link_stats(),
        nonzero_results: nonzero.into_inner(),
        zero_results: zero.into_inner(),
    };
    Ok((basis, report))
}

/// Answers every thread's first REQUEST with TERM.
fn terminate_idle(conns: &[Node]) -> Result<()> {
    for node in conns {
        for _ in 0..node.threads {
            let Msg::Request { thread } = Msg::decode(&node.channel.receive(request_tag(node.node))?)? else {
                return Err(NetError::protocol("expected REQUEST"));
            };
            node.channel.send(pair_tag(node.node, thread), &Msg::Term.encode())?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn serve_all<F: Field>(
    conns: &[Node],
    pairs: &PairList<F>,
    ledger: &Ledger,
    dht: &DhtMaster,
    sent: &[AtomicU64],
    nonzero: &AtomicU64,
    zero: &AtomicU64,
) -> Result<()> {
    let servers_done = AtomicBool::new(false);
    let fail = |e: NetError| {
        ledger.fail(e.to_string());
        pairs.wake_all();
        conns.iter().for_each(|n| n.channel.close());
    };
    thread::scope(|s| {
        let mut servers = Vec::new();
        for (node, sent) in conns.iter().zip(sent) {
            let fail = &fail;
            servers.push(s.spawn(move || {
                if let Err(e) = serve_requests(node, pairs, ledger, sent) {
                    fail(e);
                }
            }));
            let servers_done = &servers_done;
            s.spawn(move || {
                if let Err(e) = receive_results(node, pairs, ledger, dht, nonzero, zero, servers_done) {
                    fail(e);
                }
            });
        }
        for h in servers {
            let _ = h.join();
        }
        servers_done.store(true, Ordering::SeqCst);
    });
    match ledger.failure() {
        Some(f) => Err(NetError::Distributed(f)),
        None => Ok(()),
    }
}

fn serve_requests<F: Field>(node: &Node, pairs: &PairList<F>, ledger: &Ledger, sent: &AtomicU64) -> Result<()> {
    let ch = &node.channel;
    let mut terminated = 0;
    while terminated < node.threads {
        let thread = match Msg::decode(&ch.receive(request_tag(node.node))?)? {
            Msg::Request { thread } if thread < node.threads => thread,
            m => return Err(NetError::protocol(format!("node {}: bad request {m:?}", node.node))),
        };
        loop {
            match ledger.acquire(pairs, node.node, thread)? {
                Acquire::Pair(p) => {
                    let msg = Msg::Pair { i: p.i as u64, j: p.j as u64, seq: p.seq };
                    ch.send(pair_tag(node.node, thread), &msg.encode())?;
                    sent.fetch_add(1, Ordering::Relaxed);
                    break;
                }
                Acquire::Done => {
                    ch.send(pair_tag(node.node, thread), &Msg::Term.encode())?;
                    terminated += 1;
                    pairs.wake_all();
                    break;
                }
                Acquire::Wait => pairs.wait_for_work(POLL),
            }
        }
    }
    Ok(())
}

fn receive_results<F: Field>(
    node: &Node,
    pairs: &PairList<F>,
    ledger: &Ledger,
    dht: &DhtMaster,
    nonzero: &AtomicU64,
    zero: &AtomicU64,
    servers_done: &AtomicBool,
) -> Result<()> {
    let ch = &node.channel;
    let ring = pairs.ring();
    loop {
        let bytes = match ch.receive_timeout(result_tag(node.node), POLL) {
            Ok(Some(b)) => b,
            Ok(None) if servers_done.load(Ordering::SeqCst) || ledger.failure().is_some() => return Ok(()),
            Ok(None) => continue,
            Err(NetError::Closed) if ledger.is_done() && ledger.in_flight() == 0 => return Ok(()),
            Err(e) => return Err(e),
        };
        let Msg::Result { thread, seq, poly } = Msg::decode(&bytes)? else {
            return Err(NetError::protocol(format!("node {}: expected RESULT", node.node)));
        };
        let pair = ledger.pair_for(node.node, thread, seq)?;
        let poly = poly.map(|b| Polynomial::decode(ring, &b)).transpose()?;
        match poly {
            Some(_) => nonzero.fetch_add(1, Ordering::Relaxed),
            None => zero.fetch_add(1, Ordering::Relaxed),
        };
        for (idx, p) in pairs.complete(&pair, poly)? {
            dht.put(idx as u64, p.encode())?;
        }
        ledger.release(seq);
        ch.send(ack_tag(node.node, thread), &Msg::Ack { seq }.encode())?;
        ledger.finish(seq);
        pairs.wake_all();
    }
}

/// Runs a hybrid worker node with `job.threads` reducer threads until the
/// master terminates it.
pub fn run_worker(job: &JobDescriptor) -> Result<WorkerReport> {
    with_field!(&job.ring.field, |field| {
        let ring = job.ring.build(field)?;
        worker_node(&ring, job)
    })
}

fn worker_node<F: Field>(ring: &Arc<PolyRing<F>>, job: &JobDescriptor) -> Result<WorkerReport> {
    if job.threads == 0 {
        return Err(GbError::Config("a worker node needs at least one thread".into()).into());
    }
    let basis = DhtBasis::new(DhtClient::connect(&job.dht, CONNECT_TIMEOUT)?, ring.clone());
    let ch = TaggedChannel::connect(&job.master, CONNECT_TIMEOUT)?;
    ch.send(HELLO_TAG, &Msg::Hello { node: job.node, threads: job.threads }.encode())?;
    let handled = AtomicU64::new(0);
    let outcomes: Vec<Result<WorkerReport>> = thread::scope(|s| {
        let handles: Vec<_> = (0..job.threads)
            .map(|t| {
                let (basis, ch, handled) = (&basis, &ch, &handled);
                s.spawn(move || {
                    let r = reducer(job, t, basis, ch, handled);
                    if r.is_err() {
                        ch.close();
                        basis.client().close();
                    }
                    r
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err(NetError::Job("reducer panicked".into())))).collect()
    });
    ch.close();
    basis.client().close();
    let mut report = WorkerReport { node: job.node, threads: job.threads, ..Default::default() };
    for o in outcomes {
        let r = o?;
        report.pairs += r.pairs;
        report.zero += r.zero;
        report.restarts += r.restarts;
    }
    Ok(report)
}

fn reducer<F: Field>(
    job: &JobDescriptor,
    thread: u32,
    basis: &DhtBasis<F>,
    ch: &TaggedChannel,
    handled: &AtomicU64,
) -> Result<WorkerReport> {
    let node = job.node;
    let mut report = WorkerReport { node, threads: 1, ..Default::default() };
    loop {
        ch.send(request_tag(node), &Msg::Request { thread }.encode())?;
        let (i, j, seq) = match Msg::decode(&ch.receive(pair_tag(node, thread))?)? {
            Msg::Term => return Ok(report),
            Msg::Pair { i, j, seq } => (i, j, seq),
            m => return Err(NetError::protocol(format!("expected PAIR or TERM, got {}", m.name()))),
        };
        let (poly, restarts) = reduce_pair(basis, i, j)?;
        report.pairs += 1;
        report.restarts += restarts as u64;
        report.zero += poly.is_none() as u64;
        if job.fail_after > 0 && handled.fetch_add(1, Ordering::SeqCst) + 1 >= job.fail_after {
            return Err(NetError::Job(format!("node {node} stopped after {} pairs", job.fail_after)));
        }
        ch.send(result_tag(node), &Msg::Result { thread, seq, poly }.encode())?;
        match Msg::decode(&ch.receive(ack_tag(node, thread))?)? {
            Msg::Ack { seq: s } if s == seq => {}
            m => return Err(NetError::protocol(format!("expected ACK {seq}, got {m:?}"))),
        }
    }
}
