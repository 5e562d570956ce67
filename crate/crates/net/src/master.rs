//! Master-side plumbing shared by the distributed drivers: the control
//! listener, the hash table, node handshakes and run reports.

use std::net::TcpListener;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use gb_core::gb_seq::prepare_generators;
use gb_core::{Field, GbStats, PairList, PairListConfig, Polynomial};

use crate::channel::{ChannelStats, Tap, TaggedChannel};
use crate::dht::{DhtMaster, LinkStats};
use crate::error::{NetError, Result};
use crate::msg::Msg;

/// Tag of the HELLO message a worker node sends first.
pub const HELLO_TAG: u64 = 0;

const ACCEPT_POLL: Duration = Duration::from_millis(5);

#[derive(Clone)]
pub struct MasterConfig {
    pub pairs: PairListConfig,
    /// How long to wait for all nodes to connect.
    pub accept_timeout: Duration,
    /// Observer installed on every control channel.
    pub tap: Option<Tap>,
}

impl Default for MasterConfig {
    fn default() -> Self {
        MasterConfig { pairs: PairListConfig::default(), accept_timeout: Duration::from_secs(60), tap: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NodeReport {
    pub node: u32,
    pub threads: u32,
    pub channel: ChannelStats,
    pub pairs_sent: u64,
}

/// Outcome of a distributed run beyond the basis itself.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunReport {
    pub stats: GbStats,
    pub nodes: Vec<NodeReport>,
    /// Control connections accepted over the whole run.
    pub control_connections: usize,
    pub dht_links: Vec<LinkStats>,
    pub nonzero_results: u64,
    pub zero_results: u64,
}

pub(crate) struct Node {
    pub node: u32,
    pub threads: u32,
    pub channel: TaggedChannel,
}

/// Listening sockets of a master: control channel and hash table.
pub struct MasterEndpoint {
    listener: Option<TcpListener>,
    control_addr: String,
    dht: DhtMaster,
}

impl MasterEndpoint {
    /// Binds both listeners; port 0 picks free ports.
    pub fn bind(control: &str, dht: &str) -> Result<Self> {
        let listener = TcpListener::bind(control)?;
        let control_addr = listener.local_addr()?.to_string();
        Ok(MasterEndpoint { listener: Some(listener), control_addr, dht: DhtMaster::bind(dht)? })
    }

    pub fn control_addr(&self) -> &str {
        &self.control_addr
    }

    pub fn dht_addr(&self) -> &str {
        self.dht.local_addr()
    }

    pub(crate) fn dht(&self) -> &DhtMaster {
        &self.dht
    }

    pub(crate) fn dht_mut(&mut self) -> &mut DhtMaster {
        &mut self.dht
    }

    /// Accepts `n` nodes, each identified by its HELLO, and keeps counting
    /// any further control connections until the returned guard is
    /// finished.
    pub(crate) fn accept_nodes(&mut self, n: usize, config: &MasterConfig) -> Result<(Vec<Node>, ConnectionCounter)> {
        let listener = self.listener.take().ok_or_else(|| NetError::protocol("endpoint already used"))?;
        listener.set_nonblocking(true)?;
        let deadline = Instant::now() + config.accept_timeout;
        let mut slots: Vec<Option<Node>> = (0..n).map(|_| None).collect();
        let mut accepted = 0;
        while accepted < n {
            let stream = match listener.accept() {
                Ok((s, _)) => s,
                Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                    if Instant::now() >= deadline {
                        return Err(NetError::Timeout(format!("{accepted} of {n} worker nodes connected")));
                    }
                    thread::sleep(ACCEPT_POLL);
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            stream.set_nonblocking(false)?;
            let channel = TaggedChannel::build(stream, config.tap.clone(), crate::frame::DEFAULT_MAX_FRAME)?;
            let left = deadline.saturating_duration_since(Instant::now()).max(Duration::from_millis(1));
            let hello = channel
                .receive_timeout(HELLO_TAG, left)?
                .ok_or_else(|| NetError::Timeout("worker sent no HELLO".into()))?;
            let Msg::Hello { node, threads } = Msg::decode(&hello)? else {
                return Err(NetError::protocol("expected HELLO"));
            };
            if threads == 0 {
                return Err(NetError::protocol(format!("node {node} offers no threads")));
            }
            match slots.get_mut(node as usize) {
                Some(slot @ None) => *slot = Some(Node { node, threads, channel }),
                Some(Some(_)) => return Err(NetError::protocol(format!("node {node} connected twice"))),
                None => return Err(NetError::protocol(format!("node id {node} out of range for {n} nodes"))),
            }
            accepted += 1;
        }
        let counter = ConnectionCounter::start(listener, n);
        Ok((slots.into_iter().map(Option::unwrap).collect(), counter))
    }
}

/// Counts control connections arriving after the handshake phase; they
/// are closed immediately.
pub(crate) struct ConnectionCounter {
    count: Arc<AtomicUsize>,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl ConnectionCounter {
    fn start(listener: TcpListener, initial: usize) -> Self {
        let count = Arc::new(AtomicUsize::new(initial));
        let stop = Arc::new(AtomicBool::new(false));
        let (c, s) = (count.clone(), stop.clone());
        let handle = thread::spawn(move || {
            while !s.load(Ordering::SeqCst) {
                match listener.accept() {
                    Ok(_) => {
                        c.fetch_add(1, Ordering::SeqCst);
                    }
                    Err(_) => thread::sleep(ACCEPT_POLL),
                }
            }
        });
        ConnectionCounter { count, stop, handle: Some(handle) }
    }

    pub(crate) fn finish(mut self) -> usize {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
        self.count.load(Ordering::SeqCst)
    }
}

/// Prepares the generators, fills a pair list and publishes the
/// generators in the hash table. `None` if no nonzero generator is left.
pub(crate) fn seed<F: Field>(
    gens: &[Polynomial<F>],
    config: PairListConfig,
    dht: &DhtMaster,
) -> Result<Option<PairList<F>>> {
    let Some((ring, gens)) = prepare_generators(gens)? else { return Ok(None) };
    let pairs = PairList::new(&ring, config);
    for g in &gens {
        let idx = pairs.put(g)?;
        let p = pairs.basis().get(idx).expect("just put");
        dht.put(idx as u64, p.encode())?;
    }
    Ok(Some(pairs))
}

pub(crate) fn gb_err(e: NetError) -> gb_core::GbError {
    gb_core::GbError::Worker(e.to_string())
}
