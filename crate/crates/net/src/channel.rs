//! Tagged message channel over one TCP connection.
//!
//! Any number of threads may send and receive. A single reader thread
//! demultiplexes inbound frames into per-tag FIFO queues; messages for tags
//! nobody waits on yet are buffered.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::io::{BufReader, Write};
use std::net::{Shutdown, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use crate::error::{NetError, Result};
use crate::frame::{encode_frame, read_frame, FrameKind, DEFAULT_MAX_FRAME};

pub type ChannelTag = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Sent,
    Received,
}

/// Observer called for every tagged message with its direction, tag and
/// payload (tag bytes excluded). Outbound messages are reported under the
/// sender lock just before they are written.
pub type Tap = Arc<dyn Fn(Direction, ChannelTag, &[u8]) + Send + Sync>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ChannelStats {
    pub frames_sent: u64,
    pub bytes_sent: u64,
    pub frames_received: u64,
    pub bytes_received: u64,
}

#[derive(Default)]
struct Counters {
    frames_sent: AtomicU64,
    bytes_sent: AtomicU64,
    frames_received: AtomicU64,
    bytes_received: AtomicU64,
}

#[derive(Default)]
struct Demux {
    queues: HashMap<ChannelTag, VecDeque<Vec<u8>>>,
    closed: bool,
    error: Option<String>,
}

struct Shared {
    demux: Mutex<Demux>,
    arrived: Condvar,
    counters: Counters,
    tap: Option<Tap>,
}

struct Inner {
    writer: Mutex<Option<TcpStream>>,
    socket: TcpStream,
    shared: Arc<Shared>,
    max_frame: usize,
    peer: String,
}

impl Drop for Inner {
    fn drop(&mut self) {
        let _ = self.socket.shutdown(Shutdown::Both);
    }
}

/// Cloning yields another handle to the same connection.
#[derive(Clone)]
pub struct TaggedChannel {
    inner: Arc<Inner>,
}

impl fmt::Debug for TaggedChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TaggedChannel").field("peer", &self.inner.peer).finish()
    }
}

impl TaggedChannel {
    pub fn new(stream: TcpStream) -> Result<Self> {
        Self::build(stream, None, DEFAULT_MAX_FRAME)
    }

    pub fn with_tap(stream: TcpStream, tap: Tap) -> Result<Self> {
        Self::build(stream, Some(tap), DEFAULT_MAX_FRAME)
    }

    pub fn build(stream: TcpStream, tap: Option<Tap>, max_frame: usize) -> Result<Self> {
        stream.set_nodelay(true)?;
        let peer = stream.peer_addr().map(|a| a.to_string()).unwrap_or_default();
        let shared = Arc::new(Shared {
            demux: Mutex::new(Demux::default()),
            arrived: Condvar::new(),
            counters: Counters::default(),
            tap,
        });
        let reader = stream.try_clone()?;
        let writer = stream.try_clone()?;
        let sh = shared.clone();
        thread::Builder::new()
            .name(format!("demux {peer}"))
            .spawn(move || demultiplex(reader, sh, max_frame))?;
        Ok(TaggedChannel {
            inner: Arc::new(Inner { writer: Mutex::new(Some(writer)), socket: stream, shared, max_frame, peer }),
        })
    }

    pub fn connect(addr: &str, timeout: Duration) -> Result<Self> {
        Self::new(connect_stream(addr, timeout)?)
    }

    pub fn peer(&self) -> &str {
        &self.inner.peer
    }

    /// Sends one message; the frame is written with a single call under the
    /// sender lock.
    pub fn send(&self, tag: ChannelTag, payload: &[u8]) -> Result<()> {
        if payload.len() + 9 > self.inner.max_frame {
            return Err(NetError::FrameTooLarge(payload.len() + 9));
        }
        let bytes = encode_frame(FrameKind::Tagged, &[&tag.to_be_bytes(), payload]);
        let mut w = self.inner.writer.lock().unwrap();
        let stream = w.as_mut().ok_or(NetError::Closed)?;
        // Observed before the bytes leave, so no reply can be seen first.
        if let Some(tap) = &self.inner.shared.tap {
            tap(Direction::Sent, tag, payload);
        }
        if let Err(e) = stream.write_all(&bytes) {
            *w = None;
            return Err(e.into());
        }
        let c = &self.inner.shared.counters;
        c.frames_sent.fetch_add(1, Ordering::Relaxed);
        c.bytes_sent.fetch_add(bytes.len() as u64, Ordering::Relaxed);
        Ok(())
    }

    /// Blocks until a message with `tag` is available. After the peer has
    /// closed and the queue for `tag` is drained, returns
    /// [`NetError::Closed`].
    pub fn receive(&self, tag: ChannelTag) -> Result<Vec<u8>> {
        self.receive_until(tag, None)?.ok_or(NetError::Closed)
    }

    /// Like [`TaggedChannel::receive`] but gives up after `timeout`,
    /// returning `Ok(None)`.
    pub fn receive_timeout(&self, tag: ChannelTag, timeout: Duration) -> Result<Option<Vec<u8>>> {
        match self.receive_until(tag, Some(Instant::now() + timeout)) {
            Err(NetError::Closed) => Err(NetError::Closed),
            r => r,
        }
    }

    fn receive_until(&self, tag: ChannelTag, deadline: Option<Instant>) -> Result<Option<Vec<u8>>> {
        let sh = &self.inner.shared;
        let mut d = sh.demux.lock().unwrap();
        loop {
            if let Some(m) = d.queues.get_mut(&tag).and_then(VecDeque::pop_front) {
                return Ok(Some(m));
            }
            if d.closed {
                return match &d.error {
                    Some(e) => Err(NetError::Protocol(e.clone())),
                    None => Err(NetError::Closed),
                };
            }
            match deadline {
                None => d = sh.arrived.wait(d).unwrap(),
                Some(t) => {
                    let now = Instant::now();
                    if now >= t {
                        return Ok(None);
                    }
                    d = sh.arrived.wait_timeout(d, t - now).unwrap().0;
                }
            }
        }
    }

    /// Number of buffered, not yet received messages for `tag`.
    pub fn pending(&self, tag: ChannelTag) -> usize {
        self.inner.shared.demux.lock().unwrap().queues.get(&tag).map_or(0, VecDeque::len)
    }

    pub fn is_closed(&self) -> bool {
        self.inner.shared.demux.lock().unwrap().closed
    }

    pub fn stats(&self) -> ChannelStats {
        let c = &self.inner.shared.counters;
        ChannelStats {
            frames_sent: c.frames_sent.load(Ordering::Relaxed),
            bytes_sent: c.bytes_sent.load(Ordering::Relaxed),
            frames_received: c.frames_received.load(Ordering::Relaxed),
            bytes_received: c.bytes_received.load(Ordering::Relaxed),
        }
    }

    /// Shuts the connection down in both directions. Queued inbound
    /// messages stay receivable.
    pub fn close(&self) {
        *self.inner.writer.lock().unwrap() = None;
        let _ = self.inner.socket.shutdown(Shutdown::Both);
    }
}

fn demultiplex(stream: TcpStream, sh: Arc<Shared>, max_frame: usize) {
    let mut r = BufReader::new(stream);
    let error = loop {
        match read_frame(&mut r, max_frame) {
            Ok(None) => break None,
            Ok(Some(f)) if f.kind == FrameKind::Tagged && f.payload.len() >= 8 => {
                let tag = u64::from_be_bytes(f.payload[..8].try_into().unwrap());
                let body = f.payload[8..].to_vec();
                sh.counters.frames_received.fetch_add(1, Ordering::Relaxed);
                sh.counters.bytes_received.fetch_add(f.wire_len() as u64, Ordering::Relaxed);
                if let Some(tap) = &sh.tap {
                    tap(Direction::Received, tag, &body);
                }
                sh.demux.lock().unwrap().queues.entry(tag).or_default().push_back(body);
                sh.arrived.notify_all();
            }
            Ok(Some(f)) => break Some(format!("unexpected {:?} frame on a tagged channel", f.kind)),
            Err(NetError::Io(_)) => break None,
            Err(e) => break Some(e.to_string()),
        }
    };
    let mut d = sh.demux.lock().unwrap();
    d.closed = true;
    d.error = error;
    drop(d);
    sh.arrived.notify_all();
}

/// Resolves `addr` and connects with a timeout per resolved address.
pub fn connect_stream(addr: &str, timeout: Duration) -> Result<TcpStream> {
    let fail = |source| NetError::Connect { addr: addr.to_string(), source };
    let addrs = addr.to_socket_addrs().map_err(fail)?;
    let mut last = std::io::Error::new(std::io::ErrorKind::NotFound, "no address");
    for a in addrs {
        match TcpStream::connect_timeout(&a, timeout) {
            Ok(s) => return Ok(s),
            Err(e) => last = e,
        }
    }
    Err(fail(last))
}
