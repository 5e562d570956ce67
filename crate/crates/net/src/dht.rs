//! Centrally mastered distributed hash table.
//!
//! The master owns the authoritative table and pushes every insert to all
//! connected clients; a client joining late first receives the entries put
//! so far. Keys are write-once. Values stay encoded; [`DhtBasis`] decodes
//! them lazily into polynomials.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufReader, BufWriter, Write};
use std::marker::PhantomData;
use std::net::{Shutdown, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use gb_core::reduce::BasisView;
use gb_core::{Field, GbError, PolyRing, Polynomial};

use crate::channel::connect_stream;
use crate::error::{NetError, Result};
use crate::frame::{encode_frame, read_frame, FrameKind, DEFAULT_MAX_FRAME};

const OP_PUT: u8 = 0;
const OP_BYE: u8 = 1;

const ACCEPT_POLL: Duration = Duration::from_millis(5);

type Value = Arc<[u8]>;

enum Out {
    Put(u64, Value),
    Bye,
}

/// Traffic over one master-to-client link.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinkStats {
    pub peer: String,
    pub entries_sent: u64,
    pub bytes_sent: u64,
    /// Largest number of times any single key was sent on this link.
    pub max_sends_per_key: u32,
}

#[derive(Default)]
struct LinkCounters {
    entries: AtomicU64,
    bytes: AtomicU64,
    per_key: Mutex<HashMap<u64, u32>>,
    failed: AtomicBool,
}

struct Link {
    peer: String,
    tx: Sender<Out>,
    counters: Arc<LinkCounters>,
    writer: Option<JoinHandle<()>>,
}

#[derive(Default)]
struct MasterTable {
    entries: BTreeMap<u64, Value>,
    version: u64,
    links: Vec<Link>,
    closed: bool,
}

struct MasterInner {
    table: Mutex<MasterTable>,
    stop: AtomicBool,
    addr: String,
}

pub struct DhtMaster {
    inner: Arc<MasterInner>,
    acceptor: Option<JoinHandle<()>>,
}

impl DhtMaster {
    /// Listens on `addr` (port 0 picks a free port).
    pub fn bind(addr: &str) -> Result<Self> {
        let listener = TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        let inner = Arc::new(MasterInner {
            table: Mutex::new(MasterTable::default()),
            stop: AtomicBool::new(false),
            addr: listener.local_addr()?.to_string(),
        });
        let acc = inner.clone();
        let acceptor = thread::Builder::new().name("dht accept".into()).spawn(move || accept_loop(listener, acc))?;
        Ok(DhtMaster { inner, acceptor: Some(acceptor) })
    }

    pub fn local_addr(&self) -> &str {
        &self.inner.addr
    }

    /// Records `value` under the unbound `key` and broadcasts it. Returns
    /// the new version.
    pub fn put(&self, key: u64, value: Vec<u8>) -> Result<u64> {
        let mut t = self.inner.table.lock().unwrap();
        if t.closed {
            return Err(NetError::Shutdown);
        }
        if t.entries.contains_key(&key) {
            return Err(NetError::DuplicateKey(key));
        }
        if let Some(l) = t.links.iter().find(|l| l.counters.failed.load(Ordering::SeqCst)) {
            return Err(NetError::Distributed(format!("hash table client {} disconnected", l.peer)));
        }
        let value: Value = value.into();
        t.entries.insert(key, value.clone());
        t.version += 1;
        for l in &t.links {
            let _ = l.tx.send(Out::Put(key, value.clone()));
        }
        Ok(t.version)
    }

    pub fn get(&self, key: u64) -> Option<Value> {
        self.inner.table.lock().unwrap().entries.get(&key).cloned()
    }

    pub fn version(&self) -> u64 {
        self.inner.table.lock().unwrap().version
    }

    pub fn len(&self) -> usize {
        self.inner.table.lock().unwrap().entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Version and entries sorted by key, read atomically.
    pub fn snapshot(&self) -> (u64, Vec<(u64, Value)>) {
        let t = self.inner.table.lock().unwrap();
        (t.version, t.entries.iter().map(|(k, v)| (*k, v.clone())).collect())
    }

    pub fn client_count(&self) -> usize {
        self.inner.table.lock().unwrap().links.len()
    }

    /// Blocks until `n` clients have connected.
    pub fn wait_for_clients(&self, n: usize, timeout: Duration) -> Result<()> {
        let deadline = Instant::now() + timeout;
        while self.client_count() < n {
            if Instant::now() >= deadline {
                return Err(NetError::Timeout(format!("{} of {n} hash table clients connected", self.client_count())));
            }
            thread::sleep(ACCEPT_POLL);
        }
        Ok(())
    }

    pub fn link_stats(&self) -> Vec<LinkStats> {
        let t = self.inner.table.lock().unwrap();
        t.links
            .iter()
            .map(|l| LinkStats {
                peer: l.peer.clone(),
                entries_sent: l.counters.entries.load(Ordering::SeqCst),
                bytes_sent: l.counters.bytes.load(Ordering::SeqCst),
                max_sends_per_key: l.counters.per_key.lock().unwrap().values().copied().max().unwrap_or(0),
            })
            .collect()
    }

    /// Stops accepting puts, sends a goodbye to every client after the
    /// queued entries, and waits for the writers to finish.
    pub fn shutdown(&mut self) {
        self.inner.stop.store(true, Ordering::SeqCst);
        if let Some(h) = self.acceptor.take() {
            let _ = h.join();
        }
        let writers: Vec<JoinHandle<()>> = {
            let mut t = self.inner.table.lock().unwrap();
            t.closed = true;
            t.links
                .iter_mut()
                .filter_map(|l| {
                    let _ = l.tx.send(Out::Bye);
                    l.writer.take()
                })
                .collect()
        };
        for w in writers {
            let _ = w.join();
        }
    }
}

impl Drop for DhtMaster {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn accept_loop(listener: TcpListener, inner: Arc<MasterInner>) {
    while !inner.stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, peer)) => {
                if let Err(e) = register(&inner, stream, peer.to_string()) {
                    eprintln!("hash table: dropping client {peer}: {e}");
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => thread::sleep(ACCEPT_POLL),
            Err(_) => thread::sleep(ACCEPT_POLL),
        }
    }
}

fn register(inner: &MasterInner, stream: TcpStream, peer: String) -> Result<()> {
    stream.set_nonblocking(false)?;
    stream.set_nodelay(true)?;
    let (tx, rx) = mpsc::channel();
    let counters = Arc::new(LinkCounters::default());
    let mut t = inner.table.lock().unwrap();
    if t.closed {
        return Ok(());
    }
    for (k, v) in &t.entries {
        let _ = tx.send(Out::Put(*k, v.clone()));
    }
    let c = counters.clone();
    let writer = thread::Builder::new().name(format!("dht push {peer}")).spawn(move || push(stream, rx, c))?;
    t.links.push(Link { peer, tx, counters, writer: Some(writer) });
    Ok(())
}

fn push(stream: TcpStream, rx: Receiver<Out>, c: Arc<LinkCounters>) {
    let Ok(clone) = stream.try_clone() else {
        return c.failed.store(true, Ordering::SeqCst);
    };
    let mut w = BufWriter::new(clone);
    let mut next = rx.recv().ok();
    while let Some(out) = next.take() {
        let bytes = match &out {
            Out::Put(key, v) => encode_frame(FrameKind::DhtOp, &[&[OP_PUT], &key.to_be_bytes(), v]),
            Out::Bye => encode_frame(FrameKind::DhtOp, &[&[OP_BYE]]),
        };
        if w.write_all(&bytes).is_err() {
            c.failed.store(true, Ordering::SeqCst);
            return;
        }
        match out {
            Out::Put(key, _) => {
                c.entries.fetch_add(1, Ordering::SeqCst);
                c.bytes.fetch_add(bytes.len() as u64, Ordering::SeqCst);
                *c.per_key.lock().unwrap().entry(key).or_default() += 1;
            }
            Out::Bye => break,
        }
        next = rx.try_recv().ok();
        if next.is_none() {
            if w.flush().is_err() {
                c.failed.store(true, Ordering::SeqCst);
                return;
            }
            next = rx.recv().ok();
        }
    }
    let _ = w.flush();
    drop(w);
    let _ = stream.shutdown(Shutdown::Write);
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum ClientState {
    Open,
    Shutdown,
    Failed(String),
}

struct ClientTable {
    entries: BTreeMap<u64, Value>,
    version: u64,
    state: ClientState,
}

struct ClientInner {
    table: Mutex<ClientTable>,
    arrived: Condvar,
    socket: TcpStream,
}

impl Drop for ClientInner {
    fn drop(&mut self) {
        let _ = self.socket.shutdown(Shutdown::Both);
    }
}

/// Read-only replica of a [`DhtMaster`], filled by a receiver thread.
#[derive(Clone)]
pub struct DhtClient {
    inner: Arc<ClientInner>,
}

impl DhtClient {
    pub fn connect(addr: &str, timeout: Duration) -> Result<Self> {
        let stream = connect_stream(addr, timeout)?;
        stream.set_nodelay(true)?;
        let inner = Arc::new(ClientInner {
            table: Mutex::new(ClientTable { entries: BTreeMap::new(), version: 0, state: ClientState::Open }),
            arrived: Condvar::new(),
            socket: stream.try_clone()?,
        });
        let weak = Arc::downgrade(&inner);
        thread::Builder::new().name("dht receive".into()).spawn(move || {
            let mut r = BufReader::new(stream);
            let end = loop {
                let op = match read_frame(&mut r, DEFAULT_MAX_FRAME) {
                    Ok(Some(f)) if f.kind == FrameKind::DhtOp => parse_op(&f.payload),
                    Ok(Some(f)) => Err(NetError::protocol(format!("unexpected {:?} frame from hash table", f.kind))),
                    Ok(None) => Err(NetError::protocol("hash table master went away")),
                    Err(e) => Err(e),
                };
                let Some(inner) = weak.upgrade() else { return };
                let mut t = inner.table.lock().unwrap();
                match op {
                    Ok(Some((key, value))) => {
                        if t.entries.insert(key, value.into()).is_some() {
                            break (inner.clone(), ClientState::Failed(format!("key {key} delivered twice")));
                        }
                        t.version += 1;
                        drop(t);
                        inner.arrived.notify_all();
                    }
                    Ok(None) => break (inner.clone(), ClientState::Shutdown),
                    Err(e) => break (inner.clone(), ClientState::Failed(e.to_string())),
                }
            };
            let (inner, state) = end;
            let mut t = inner.table.lock().unwrap();
            if t.state == ClientState::Open {
                t.state = state;
            }
            drop(t);
            inner.arrived.notify_all();
        })?;
        Ok(DhtClient { inner })
    }

    pub fn get(&self, key: u64) -> Option<Value> {
        self.inner.table.lock().unwrap().entries.get(&key).cloned()
    }

    /// Blocks until `key` is present locally.
    pub fn get_wait(&self, key: u64) -> Result<Value> {
        self.wait(key, None)?.ok_or(NetError::Shutdown)
    }

    /// Like [`DhtClient::get_wait`], giving up with `Ok(None)` after
    /// `timeout`.
    pub fn get_wait_timeout(&self, key: u64, timeout: Duration) -> Result<Option<Value>> {
        self.wait(key, Some(Instant::now() + timeout))
    }

    fn wait(&self, key: u64, deadline: Option<Instant>) -> Result<Option<Value>> {
        let mut t = self.inner.table.lock().unwrap();
        loop {
            if let Some(v) = t.entries.get(&key) {
                return Ok(Some(v.clone()));
            }
            match &t.state {
                ClientState::Open => {}
                ClientState::Shutdown => return Err(NetError::Shutdown),
                ClientState::Failed(e) => return Err(NetError::Distributed(e.clone())),
            }
            match deadline {
                None => t = self.inner.arrived.wait(t).unwrap(),
                Some(d) => {
                    let now = Instant::now();
                    if now >= d {
                        return Ok(None);
                    }
                    t = self.inner.arrived.wait_timeout(t, d - now).unwrap().0;
                }
            }
        }
    }

    pub fn version(&self) -> u64 {
        self.inner.table.lock().unwrap().version
    }

    pub fn len(&self) -> usize {
        self.inner.table.lock().unwrap().entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_shut_down(&self) -> bool {
        self.inner.table.lock().unwrap().state != ClientState::Open
    }

    /// Version and entries sorted by key, read atomically.
    pub fn snapshot(&self) -> (u64, Vec<(u64, Value)>) {
        let t = self.inner.table.lock().unwrap();
        (t.version, t.entries.iter().map(|(k, v)| (*k, v.clone())).collect())
    }

    /// Disconnects; blocked readers see a shutdown.
    pub fn close(&self) {
        let mut t = self.inner.table.lock().unwrap();
        if t.state == ClientState::Open {
            t.state = ClientState::Shutdown;
        }
        drop(t);
        let _ = self.inner.socket.shutdown(Shutdown::Both);
        self.inner.arrived.notify_all();
    }
}

/// `Ok(None)` for a goodbye.
fn parse_op(payload: &[u8]) -> Result<Option<(u64, Vec<u8>)>> {
    match payload.split_first() {
        Some((&OP_PUT, rest)) if rest.len() >= 8 => {
            Ok(Some((u64::from_be_bytes(rest[..8].try_into().unwrap()), rest[8..].to_vec())))
        }
        Some((&OP_BYE, [])) => Ok(None),
        _ => Err(NetError::protocol("malformed hash table operation")),
    }
}

/// Polynomial view of a [`DhtClient`], decoding entries on first use.
pub struct DhtBasis<F: Field> {
    client: DhtClient,
    ring: Arc<PolyRing<F>>,
    decoded: Mutex<HashMap<u64, Arc<Polynomial<F>>>>,
    error: Mutex<Option<GbError>>,
    _field: PhantomData<F>,
}

impl<F: Field> DhtBasis<F> {
    pub fn new(client: DhtClient, ring: Arc<PolyRing<F>>) -> Self {
        DhtBasis { client, ring, decoded: Mutex::new(HashMap::new()), error: Mutex::new(None), _field: PhantomData }
    }

    pub fn client(&self) -> &DhtClient {
        &self.client
    }

    fn decode(&self, key: u64, bytes: &[u8]) -> Result<Arc<Polynomial<F>>, GbError> {
        if let Some(p) = self.decoded.lock().unwrap().get(&key) {
            return Ok(p.clone());
        }
        let p = Arc::new(Polynomial::decode(&self.ring, bytes)?);
        Ok(self.decoded.lock().unwrap().entry(key).or_insert(p).clone())
    }

    /// Blocks until `key` has arrived, then returns it decoded.
    pub fn get_wait(&self, key: u64) -> Result<Arc<Polynomial<F>>> {
        let bytes = self.client.get_wait(key)?;
        Ok(self.decode(key, &bytes)?)
    }

    /// First decode failure seen by [`BasisView::snapshot`], which cannot
    /// report errors itself.
    pub fn take_error(&self) -> Option<GbError> {
        self.error.lock().unwrap().take()
    }
}

impl<F: Field> BasisView<F> for DhtBasis<F> {
    fn version(&self) -> u64 {
        self.client.version()
    }

    fn snapshot(&self) -> (u64, Vec<Arc<Polynomial<F>>>) {
        let (version, entries) = self.client.snapshot();
        let mut out = Vec::with_capacity(entries.len());
        for (k, v) in entries {
            match self.decode(k, &v) {
                Ok(p) => out.push(p),
                Err(e) => {
                    self.error.lock().unwrap().get_or_insert(e);
                }
            }
        }
        (version, out)
    }
}
