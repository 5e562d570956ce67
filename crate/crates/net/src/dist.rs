//! Distributed Buchberger: one reducer per worker node.
//!
//! The master runs one handler thread per node. Each handler takes a pair
//! from the shared queue, sends its two indexes, and waits for the
//! remainder. New polynomials reach the workers only through the hash
//! table.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use gb_core::{drive_workers, reduced_gb, with_field, CriticalPair, Field, GbError, GbStats, PolyRing, Polynomial};

use crate::channel::TaggedChannel;
use crate::dht::{DhtBasis, DhtClient};
use crate::error::{NetError, Result};
use crate::exec::{JobDescriptor, CONNECT_TIMEOUT};
use crate::master::{gb_err, seed, MasterConfig, MasterEndpoint, Node, NodeReport, RunReport, HELLO_TAG};
use crate::msg::Msg;
use crate::worker::{reduce_pair, WorkerReport};

/// Master to worker: PAIR and TERM.
pub const PAIR_TAG: u64 = 1;
/// Worker to master: REQUEST and RESULT.
pub const RESULT_TAG: u64 = 2;

/// Runs the master side against `nodes` workers that connect to
/// `endpoint`. Returns the reduced Gröbner basis.
pub fn gb_distributed_master<F: Field>(
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
    let sent: Vec<AtomicU64> = conns.iter().map(|_| AtomicU64::new(0)).collect();
    let (nonzero, zero) = (AtomicU64::new(0), AtomicU64::new(0));
    let outcome = (|| -> Result<_> {
        let Some(pairs) = seed(gens, config.pairs, endpoint.dht())? else { return Ok(None) };
        let ring = pairs.ring().clone();
        let close_all = || conns.iter().for_each(|n| n.channel.close());
        let run = drive_workers(
            &pairs,
            conns.len(),
            |id| {
                let (node, ring, sent, nonzero, zero) = (&conns[id], &ring, &sent[id], &nonzero, &zero);
                Ok(move |pair: &CriticalPair| {
                    let r = exchange(node, ring, pair).map_err(|e| {
                        close_all();
                        gb_err(e)
                    })?;
                    sent.fetch_add(1, Ordering::Relaxed);
                    match r {
                        Some(_) => nonzero.fetch_add(1, Ordering::Relaxed),
                        None => zero.fetch_add(1, Ordering::Relaxed),
                    };
                    Ok(r)
                })
            },
            |added| {
                for (idx, p) in added {
                    endpoint.dht().put(*idx as u64, p.encode()).map_err(|e| {
                        close_all();
                        gb_err(e)
                    })?;
                }
                Ok(())
            },
        );
        match run {
            Ok(()) => Ok(Some(pairs)),
            Err(GbError::Worker(m)) => Err(NetError::Distributed(m)),
            Err(e) => Err(e.into()),
        }
    })();
    let outcome = outcome.and_then(|pairs| {
        for n in &conns {
            n.channel.send(PAIR_TAG, &Msg::Term.encode())?;
        }
        Ok(pairs)
    });
    if outcome.is_err() {
        conns.iter().for_each(|n| n.channel.close());
    }
    endpoint.dht_mut().shutdown();
    let control_connections = counter.finish();
    let pairs = outcome?;
    let (basis, stats) = match &pairs {
        Some(p) => (reduced_gb(&p.polynomials())?, GbStats::from_pairs(p, start, nodes, 1)),
        None => (Vec::new(), GbStats { nodes, threads_per_node: 1, ..Default::default() }),
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

fn exchange<F: Field>(node: &Node, ring: &Arc<PolyRing<F>>, pair: &CriticalPair) -> Result<Option<Polynomial<F>>> {
    let ch = &node.channel;
    match Msg::decode(&ch.receive(RESULT_TAG)?)? {
        Msg::Request { .. } => {}
        m => return Err(NetError::protocol(format!("node {}: expected REQUEST, got {}", node.node, m.name()))),
    }
    ch.send(PAIR_TAG, &Msg::Pair { i: pair.i as u64, j: pair.j as u64, seq: pair.seq }.encode())?;
    match Msg::decode(&ch.receive(RESULT_TAG)?)? {
        Msg::Result { seq, poly, .. } if seq == pair.seq => {
            Ok(poly.map(|b| Polynomial::decode(ring, &b)).transpose()?)
        }
        m => Err(NetError::protocol(format!("node {}: expected RESULT for {}, got {}", node.node, pair.seq, m.name()))),
    }
}

/// Runs a worker node until the master terminates it.
pub fn run_worker(job: &JobDescriptor) -> Result<WorkerReport> {
    with_field!(&job.ring.field, |field| {
        let ring = job.ring.build(field)?;
        worker_loop(&ring, job)
    })
}

fn worker_loop<F: Field>(ring: &Arc<PolyRing<F>>, job: &JobDescriptor) -> Result<WorkerReport> {
    let basis = DhtBasis::new(DhtClient::connect(&job.dht, CONNECT_TIMEOUT)?, ring.clone());
    let ch = TaggedChannel::connect(&job.master, CONNECT_TIMEOUT)?;
    ch.send(HELLO_TAG, &Msg::Hello { node: job.node, threads: 1 }.encode())?;
    let mut report = WorkerReport { node: job.node, threads: 1, ..Default::default() };
    let result = loop {
        if job.fail_after > 0 && report.pairs >= job.fail_after {
            ch.close();
            break Err(NetError::Job(format!("node {} stopped after {} pairs", job.node, report.pairs)));
        }
        if let Err(e) = ch.send(RESULT_TAG, &Msg::Request { thread: 0 }.encode()) {
            break Err(e);
        }
        let msg = match ch.receive(PAIR_TAG).and_then(|b| Msg::decode(&b)) {
            Ok(m) => m,
            Err(e) => break Err(e),
        };
        let (i, j, seq) = match msg {
            Msg::Term => break Ok(()),
            Msg::Pair { i, j, seq } => (i, j, seq),
            m => break Err(NetError::protocol(format!("expected PAIR or TERM, got {}", m.name()))),
        };
        let (poly, restarts) = match reduce_pair(&basis, i, j) {
            Ok(r) => r,
            Err(e) => break Err(e),
        };
        report.pairs += 1;
        report.restarts += restarts as u64;
        report.zero += poly.is_none() as u64;
        if let Err(e) = ch.send(RESULT_TAG, &Msg::Result { thread: 0, seq, poly }.encode()) {
            break Err(e);
        }
    };
    ch.close();
    basis.client().close();
    result.map(|()| report)
}
