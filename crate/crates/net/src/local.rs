//! In-process clusters on the loopback interface: worker nodes run as
//! threads of the calling process.

use std::thread::{self, JoinHandle};

use gb_core::{Field, Polynomial, RingDescriptor};

use crate::error::{NetError, Result};
use crate::exec::{JobDescriptor, JobKind};
use crate::master::{MasterConfig, MasterEndpoint, RunReport};
use crate::worker::WorkerReport;
use crate::{dist, hyb};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Distributed,
    Hybrid,
}

/// Basis, master report and per-node worker outcomes of a local run.
pub type ClusterRun<F> = (Vec<Polynomial<F>>, RunReport, Vec<Result<WorkerReport>>);

/// Worker layout and fault injection of a local run.
#[derive(Clone, Debug)]
pub struct LocalCluster {
    pub variant: Variant,
    pub nodes: usize,
    /// Reducer threads per node; the distributed variant always uses one.
    pub threads: u32,
    /// `(node, pairs)`: that node drops out after handling `pairs` pairs.
    pub fail: Option<(u32, u64)>,
}

impl LocalCluster {
    pub fn new(variant: Variant, nodes: usize, threads: u32) -> Self {
        LocalCluster { variant, nodes, threads, fail: None }
    }

    /// Descriptors for the worker nodes of a master listening on
    /// `endpoint`.
    pub fn jobs(&self, endpoint: &MasterEndpoint, ring: &RingDescriptor) -> Vec<JobDescriptor> {
        (0..self.nodes as u32)
            .map(|node| JobDescriptor {
                kind: match self.variant {
                    Variant::Distributed => JobKind::DistWorker,
                    Variant::Hybrid => JobKind::HybridWorker,
                },
                node,
                threads: match self.variant {
                    Variant::Distributed => 1,
                    Variant::Hybrid => self.threads,
                },
                ring: ring.clone(),
                master: endpoint.control_addr().to_string(),
                dht: endpoint.dht_addr().to_string(),
                fail_after: match self.fail {
                    Some((n, k)) if n == node => k,
                    _ => 0,
                },
            })
            .collect()
    }

    /// Runs master and workers to completion. Worker failures are reported
    /// per node; the master's outcome decides the result.
    pub fn run<F: Field>(
        &self,
        gens: &[Polynomial<F>],
        config: &MasterConfig,
    ) -> Result<ClusterRun<F>> {
        let ring = gens
            .first()
            .map(|g| g.ring().descriptor())
            .ok_or_else(|| NetError::Job("no generators".into()))?;
        let endpoint = MasterEndpoint::bind("127.0.0.1:0", "127.0.0.1:0")?;
        let workers: Vec<JoinHandle<Result<WorkerReport>>> = self
            .jobs(&endpoint, &ring)
            .into_iter()
            .map(|job| {
                thread::spawn(move || match job.kind {
                    JobKind::DistWorker => dist::run_worker(&job),
                    _ => hyb::run_worker(&job),
                })
            })
            .collect();
        let outcome = match self.variant {
            Variant::Distributed => dist::gb_distributed_master(endpoint, gens, self.nodes, config),
            Variant::Hybrid => hyb::gb_hybrid_master(endpoint, gens, self.nodes, config),
        };
        let reports = workers
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(NetError::Job("worker panicked".into()))))
            .collect();
        let (basis, report) = outcome?;
        Ok((basis, report, reports))
    }
}
