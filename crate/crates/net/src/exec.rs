//! Remote job execution: a daemon that runs self-contained job
//! descriptors, and a pool that places jobs on daemons round-robin.

use std::io::BufReader;
use std::net::{TcpListener, TcpStream};
use std::panic::{self, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use gb_core::RingDescriptor;

use crate::channel::connect_stream;
use crate::error::{NetError, Result};
use crate::frame::{read_frame, write_frame, Frame, FrameKind, DEFAULT_MAX_FRAME};

pub const CONNECT_TIMEOUT: Duration = Duration::from_secs(5);

const ACCEPT_POLL: Duration = Duration::from_millis(5);

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum JobKind {
    DistWorker,
    HybridWorker,
    /// Returns its text; used to probe daemons.
    Echo(String),
}

/// Everything a daemon needs to start a job.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JobDescriptor {
    pub kind: JobKind,
    pub node: u32,
    pub threads: u32,
    pub ring: RingDescriptor,
    /// Control address of the master.
    pub master: String,
    /// Address of the master's hash table.
    pub dht: String,
    /// Fault injection: drop the connection after this many pairs; 0 never.
    pub fail_after: u64,
}

impl JobDescriptor {
    pub fn echo(text: &str) -> Self {
        JobDescriptor {
            kind: JobKind::Echo(text.to_string()),
            node: 0,
            threads: 0,
            ring: RingDescriptor { vars: vec!["x".into()], field: gb_core::FieldDescriptor::Rational, order: Default::default() },
            master: String::new(),
            dht: String::new(),
            fail_after: 0,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let (kind, text) = match &self.kind {
            JobKind::DistWorker => (0u8, ""),
            JobKind::HybridWorker => (1, ""),
            JobKind::Echo(t) => (2, t.as_str()),
        };
        out.push(kind);
        out.extend_from_slice(&self.node.to_be_bytes());
        out.extend_from_slice(&self.threads.to_be_bytes());
        out.extend_from_slice(&self.fail_after.to_be_bytes());
        for s in [self.ring.to_header().as_str(), &self.master, &self.dht, text] {
            out.extend_from_slice(&(s.len() as u32).to_be_bytes());
            out.extend_from_slice(s.as_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = bytes;
        let kind = take(&mut r, 1)?[0];
        let node = u32::from_be_bytes(take(&mut r, 4)?.try_into().unwrap());
        let threads = u32::from_be_bytes(take(&mut r, 4)?.try_into().unwrap());
        let fail_after = u64::from_be_bytes(take(&mut r, 8)?.try_into().unwrap());
        let mut strings = Vec::with_capacity(4);
        for _ in 0..4 {
            let n = u32::from_be_bytes(take(&mut r, 4)?.try_into().unwrap()) as usize;
            let s = std::str::from_utf8(take(&mut r, n)?).map_err(|_| NetError::protocol("job text is not UTF-8"))?;
            strings.push(s.to_string());
        }
        if !r.is_empty() {
            return Err(NetError::protocol("trailing bytes in job"));
        }
        let text = strings.pop().unwrap();
        let kind = match kind {
            0 => JobKind::DistWorker,
            1 => JobKind::HybridWorker,
            2 => JobKind::Echo(text),
            k => return Err(NetError::protocol(format!("unknown job kind {k}"))),
        };
        let dht = strings.pop().unwrap();
        let master = strings.pop().unwrap();
        let ring = RingDescriptor::from_header(&strings.pop().unwrap())?;
        Ok(JobDescriptor { kind, node, threads, ring, master, dht, fail_after })
    }
}

fn take<'a>(input: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
    if input.len() < n {
        return Err(NetError::protocol("truncated job"));
    }
    let (head, tail) = input.split_at(n);
    *input = tail;
    Ok(head)
}

/// Runs a job to completion and returns its output text.
pub type JobRunner = Arc<dyn Fn(&JobDescriptor) -> Result<String> + Send + Sync>;

/// The runner used by daemons: echo, or a distributed worker.
pub fn run_job(job: &JobDescriptor) -> Result<String> {
    match &job.kind {
        JobKind::Echo(t) => Ok(t.clone()),
        JobKind::DistWorker => crate::dist::run_worker(job).map(|r| r.summary()),
        JobKind::HybridWorker => crate::hyb::run_worker(job).map(|r| r.summary()),
    }
}

/// Job daemon. Each connection carries one job frame; the reply is a
/// control frame with a status byte (0 ok, 1 failed) and a message.
pub struct ExecutableServer {
    addr: String,
    stop: Arc<AtomicBool>,
    jobs: Arc<AtomicU64>,
    acceptor: Option<JoinHandle<()>>,
}

impl ExecutableServer {
    pub fn bind(addr: &str) -> Result<Self> {
        Self::with_runner(addr, Arc::new(run_job))
    }

    pub fn with_runner(addr: &str, runner: JobRunner) -> Result<Self> {
        let listener = TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?.to_string();
        let stop = Arc::new(AtomicBool::new(false));
        let jobs = Arc::new(AtomicU64::new(0));
        let (st, jb) = (stop.clone(), jobs.clone());
        let acceptor = thread::Builder::new().name("daemon accept".into()).spawn(move || {
            while !st.load(Ordering::SeqCst) {
                match listener.accept() {
                    Ok((stream, _)) => {
                        let (runner, jb) = (runner.clone(), jb.clone());
                        let _ = thread::Builder::new().name("daemon job".into()).spawn(move || {
                            if serve_one(stream, &runner).is_ok() {
                                jb.fetch_add(1, Ordering::SeqCst);
                            }
                        });
                    }
                    Err(_) => thread::sleep(ACCEPT_POLL),
                }
            }
        })?;
        Ok(ExecutableServer { addr, stop, jobs, acceptor: Some(acceptor) })
    }

    pub fn local_addr(&self) -> &str {
        &self.addr
    }

    /// Jobs that ran to completion, successfully or not.
    pub fn jobs_run(&self) -> u64 {
        self.jobs.load(Ordering::SeqCst)
    }

    /// Blocks the calling thread for as long as the daemon runs.
    pub fn wait(mut self) {
        if let Some(h) = self.acceptor.take() {
            let _ = h.join();
        }
    }

    pub fn stop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(h) = self.acceptor.take() {
            let _ = h.join();
        }
    }
}

impl Drop for ExecutableServer {
    fn drop(&mut self) {
        self.stop();
    }
}

fn serve_one(stream: TcpStream, runner: &JobRunner) -> Result<()> {
    stream.set_nonblocking(false)?;
    let mut r = BufReader::new(stream.try_clone()?);
    let frame = read_frame(&mut r, DEFAULT_MAX_FRAME)?.ok_or(NetError::Closed)?;
    if frame.kind != FrameKind::Job {
        return Err(NetError::protocol("expected a job frame"));
    }
    let outcome = JobDescriptor::decode(&frame.payload).and_then(|job| {
        panic::catch_unwind(AssertUnwindSafe(|| runner(&job)))
            .unwrap_or_else(|p| Err(NetError::Job(panic_message(&p))))
    });
    let mut reply = Vec::new();
    match outcome {
        Ok(msg) => {
            reply.push(0);
            reply.extend_from_slice(msg.as_bytes());
        }
        Err(e) => {
            reply.push(1);
            reply.extend_from_slice(e.to_string().as_bytes());
        }
    }
    write_frame(&mut &stream, &Frame::new(FrameKind::Control, reply), DEFAULT_MAX_FRAME)
}

fn panic_message(p: &Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        format!("panicked: {s}")
    } else if let Some(s) = p.downcast_ref::<String>() {
        format!("panicked: {s}")
    } else {
        "panicked".into()
    }
}

/// Handle of a submitted job.
pub struct JobHandle {
    daemon: String,
    waiter: JoinHandle<Result<String>>,
}

impl JobHandle {
    pub fn daemon(&self) -> &str {
        &self.daemon
    }

    pub fn is_finished(&self) -> bool {
        self.waiter.is_finished()
    }

    /// Waits for the job; a failed or vanished job is an error.
    pub fn join(self) -> Result<String> {
        self.waiter.join().unwrap_or_else(|_| Err(NetError::Job("job waiter panicked".into())))
    }
}

/// Places jobs on a fixed list of daemons, round-robin.
pub struct DistThreadPool {
    daemons: Vec<String>,
    next: AtomicUsize,
    connect_timeout: Duration,
}

impl DistThreadPool {
    pub fn new(daemons: Vec<String>) -> Result<Self> {
        if daemons.is_empty() {
            return Err(NetError::Job("no daemons given".into()));
        }
        Ok(DistThreadPool { daemons, next: AtomicUsize::new(0), connect_timeout: CONNECT_TIMEOUT })
    }

    pub fn with_connect_timeout(mut self, t: Duration) -> Self {
        self.connect_timeout = t;
        self
    }

    pub fn daemons(&self) -> &[String] {
        &self.daemons
    }

    /// Sends `job` to the next daemon in turn.
    pub fn submit(&self, job: &JobDescriptor) -> Result<JobHandle> {
        let k = self.next.fetch_add(1, Ordering::SeqCst) % self.daemons.len();
        self.submit_to(&self.daemons[k].clone(), job)
    }

    pub fn submit_to(&self, daemon: &str, job: &JobDescriptor) -> Result<JobHandle> {
        let stream = connect_stream(daemon, self.connect_timeout)?;
        write_frame(&mut &stream, &Frame::new(FrameKind::Job, job.encode()), DEFAULT_MAX_FRAME)?;
        let waiter = thread::Builder::new().name(format!("job on {daemon}")).spawn(move || {
            let mut r = BufReader::new(stream);
            let f = match read_frame(&mut r, DEFAULT_MAX_FRAME) {
                Ok(Some(f)) if f.kind == FrameKind::Control && !f.payload.is_empty() => f,
                Ok(_) => return Err(NetError::Job("daemon closed without a status".into())),
                Err(e) => return Err(NetError::Job(format!("lost daemon: {e}"))),
            };
            let msg = String::from_utf8_lossy(&f.payload[1..]).into_owned();
            match f.payload[0] {
                0 => Ok(msg),
                _ => Err(NetError::Job(msg)),
            }
        })?;
        Ok(JobHandle { daemon: daemon.to_string(), waiter })
    }
}
