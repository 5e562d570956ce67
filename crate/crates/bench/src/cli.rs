//! The `gb` command: option parsing and dispatch to the engines.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, ValueEnum};
use gb_core::arith::parse_modulus;
use gb_core::poly::format_system;
use gb_core::{
    gb_parallel_with, gb_sequential_with, systems, with_field, Field, FieldDescriptor, GbStats, PairListConfig,
    ParConfig, Polynomial, RingDescriptor, Selection, System, TermOrder, TieBreak,
};
use gb_net::exec::JobRunner;
use gb_net::{
    dist, gb_distributed_master, gb_hybrid_master, hyb, run_job, DistThreadPool, ExecutableServer, JobDescriptor,
    JobKind, MasterConfig, MasterEndpoint,
};

use crate::error::{BenchError, Result};
use crate::report::{self, Row};

pub const DEFAULT_MODULUS: &str = "2^127-1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Seq,
    Par,
    DistMaster,
    DistWorker,
    HybMaster,
    HybWorker,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FieldArg {
    #[value(name = "Q")]
    Q,
    #[value(name = "Zp")]
    Zp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    Greedy,
    Sequence,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Ties {
    Newest,
    Oldest,
}

#[derive(Clone, Debug, Parser)]
#[command(name = "gb", version, about = "Gröbner bases: sequential, multi-threaded and distributed")]
pub struct Cli {
    #[arg(long, value_enum, default_value = "seq")]
    pub algo: Algo,
    /// Reducer threads (par), or threads per node (hyb).
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Daemon addresses, one host:port per line.
    #[arg(long)]
    pub nodes_file: Option<PathBuf>,
    /// Worker nodes to start; defaults to one per daemon.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// A benchmark system, `katsura:N` or `cyclic:N`.
    #[arg(long, conflicts_with = "input")]
    pub system: Option<String>,
    /// A system in the text format.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Coefficient field; overrides the input header.
    #[arg(long, value_enum)]
    pub field: Option<FieldArg>,
    /// Prime modulus for Zp, decimal or `2^k-1`.
    #[arg(long)]
    pub modulus: Option<String>,
    /// Term order: lex, grlex or grevlex; overrides the input header.
    #[arg(long, value_parser = parse_order)]
    pub order: Option<TermOrder>,
    #[arg(long, value_enum, default_value = "greedy")]
    pub strategy: Strategy,
    /// Hand-out order among pairs with equal lcm.
    #[arg(long, value_enum, default_value = "newest")]
    pub ties: Ties,
    /// Append the result row to this CSV file.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Report file whose 1/1 row is the speedup baseline.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// Write the reduced basis here.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Interface to listen on.
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: String,
    #[arg(long, default_value_t = 0)]
    pub control_port: u16,
    #[arg(long, default_value_t = 0)]
    pub dht_port: u16,
    /// Serve jobs on this port (worker algorithms without `--master`).
    #[arg(long)]
    pub daemon_port: Option<u16>,
    /// Connect straight to this master instead of serving jobs.
    #[arg(long, requires = "dht")]
    pub master: Option<String>,
    /// Hash table address of the master.
    #[arg(long)]
    pub dht: Option<String>,
    /// Node id when connecting straight to a master.
    #[arg(long, default_value_t = 0)]
    pub node: u32,
    /// Fault injection: the worker quits after this many pairs.
    #[arg(long)]
    pub die_after_pairs: Option<u64>,
    /// Seconds to wait for worker nodes to connect.
    #[arg(long, default_value_t = 60)]
    pub accept_timeout: u64,
}

fn parse_order(s: &str) -> std::result::Result<TermOrder, String> {
    s.parse().map_err(|e: gb_core::GbError| e.to_string())
}

/// What a computing run produced.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub row: Row,
    pub basis: String,
}

impl Cli {
    fn pair_config(&self) -> PairListConfig {
        PairListConfig {
            selection: match self.strategy {
                Strategy::Greedy => Selection::GreedyFirstFinished,
                Strategy::Sequence => Selection::SequentialOrder,
            },
            ties: match self.ties {
                Ties::Newest => TieBreak::NewestFirst,
                Ties::Oldest => TieBreak::OldestFirst,
            },
            ..PairListConfig::default()
        }
    }

    /// The input system with field and order flags applied.
    pub fn load_system(&self) -> Result<System> {
        let mut sys = match (&self.system, &self.input) {
            (Some(name), None) => systems::named(name)?,
            (None, Some(path)) => gb_core::parse_system(&fs::read_to_string(path)?)?,
            _ => return Err(BenchError::Usage("give exactly one of --system or --input".into())),
        };
        let field = match (self.field, &self.modulus) {
            (Some(FieldArg::Q), Some(_)) => return Err(BenchError::Usage("--modulus needs --field Zp".into())),
            (Some(FieldArg::Q), None) => Some(FieldDescriptor::Rational),
            (Some(FieldArg::Zp), m) | (None, m @ Some(_)) => {
                Some(FieldDescriptor::Modular(parse_modulus(m.as_deref().unwrap_or(DEFAULT_MODULUS))?))
            }
            (None, None) => None,
        };
        if let Some(f) = field {
            sys.ring.field = f;
        }
        if let Some(o) = self.order {
            sys.ring.order = o;
        }
        Ok(sys)
    }

    fn daemons(&self) -> Result<Vec<String>> {
        let path = self.nodes_file.as_ref().ok_or_else(|| BenchError::Usage("master needs --nodes-file".into()))?;
        let daemons: Vec<String> = fs::read_to_string(path)?
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        if daemons.is_empty() {
            return Err(BenchError::Usage(format!("{} lists no daemons", path.display())));
        }
        Ok(daemons)
    }
}

/// Runs a computing algorithm (everything but the workers).
pub fn compute(cli: &Cli) -> Result<Outcome> {
    if cli.threads == 0 {
        return Err(BenchError::Usage("--threads must be at least 1".into()));
    }
    let sys = cli.load_system()?;
    let desc = sys.ring.clone();
    let (basis, stats) = with_field!(&desc.field, |field| compute_typed(cli, &sys, field))?;
    let baseline = match &cli.baseline {
        Some(p) => report::baseline(p)?,
        None => None,
    };
    let row = Row::from_stats(&stats).with_baseline(baseline);
    if let Some(p) = &cli.output {
        fs::write(p, &basis)?;
    }
    if let Some(p) = &cli.report {
        report::append(p, &row)?;
    }
    Ok(Outcome { row, basis })
}

fn compute_typed<F: Field>(cli: &Cli, sys: &System, field: F) -> Result<(String, GbStats)> {
    let ring = sys.ring.build(field)?;
    let gens = sys.polynomials(&ring)?;
    let pairs = cli.pair_config();
    let (basis, stats) = match cli.algo {
        Algo::Seq => gb_sequential_with(&gens, pairs)?,
        Algo::Par => gb_parallel_with(&gens, &ParConfig { threads: cli.threads, pairs })?,
        Algo::DistMaster | Algo::HybMaster => run_master(cli, &sys.ring, &gens, pairs)?,
        Algo::DistWorker | Algo::HybWorker => unreachable!("workers do not compute"),
    };
    Ok((format_system(&ring, &basis), stats))
}

fn run_master<F: Field>(
    cli: &Cli,
    ring: &RingDescriptor,
    gens: &[Polynomial<F>],
    pairs: PairListConfig,
) -> Result<(Vec<Polynomial<F>>, GbStats)> {
    let daemons = cli.daemons()?;
    let nodes = cli.nodes.unwrap_or(daemons.len());
    let hybrid = cli.algo == Algo::HybMaster;
    let endpoint =
        MasterEndpoint::bind(&format!("{}:{}", cli.bind, cli.control_port), &format!("{}:{}", cli.bind, cli.dht_port))?;
    let pool = DistThreadPool::new(daemons)?;
    let jobs = (0..nodes as u32)
        .map(|node| {
            pool.submit(&JobDescriptor {
                kind: if hybrid { JobKind::HybridWorker } else { JobKind::DistWorker },
                node,
                threads: if hybrid { cli.threads as u32 } else { 1 },
                ring: ring.clone(),
                master: endpoint.control_addr().to_string(),
                dht: endpoint.dht_addr().to_string(),
                fail_after: 0,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let config = MasterConfig {
        pairs,
        accept_timeout: std::time::Duration::from_secs(cli.accept_timeout),
        ..MasterConfig::default()
    };
    let outcome = if hybrid {
        gb_hybrid_master(endpoint, gens, nodes, &config)
    } else {
        gb_distributed_master(endpoint, gens, nodes, &config)
    };
    let worker_errors: Vec<String> = jobs
        .into_iter()
        .filter_map(|h| {
            let d = h.daemon().to_string();
            h.join().err().map(|e| format!("{d}: {e}"))
        })
        .collect();
    match outcome {
        Ok((basis, report)) if worker_errors.is_empty() => Ok((basis, report.stats)),
        Ok(_) => Err(BenchError::Harness(format!("workers failed: {}", worker_errors.join("; ")))),
        Err(e) if worker_errors.is_empty() => Err(e.into()),
        Err(e) => Err(BenchError::Harness(format!("{e} (workers: {})", worker_errors.join("; ")))),
    }
}

/// Runs a worker algorithm: straight against `--master`, or as a job
/// daemon on `--daemon-port` until killed.
pub fn serve(cli: &Cli) -> Result<()> {
    let fail_after = cli.die_after_pairs.unwrap_or(0);
    if let Some(master) = &cli.master {
        let sys = cli.load_system()?;
        let job = JobDescriptor {
            kind: if cli.algo == Algo::HybWorker { JobKind::HybridWorker } else { JobKind::DistWorker },
            node: cli.node,
            threads: if cli.algo == Algo::HybWorker { cli.threads as u32 } else { 1 },
            ring: sys.ring,
            master: master.clone(),
            dht: cli.dht.clone().unwrap_or_default(),
            fail_after,
        };
        let report = match job.kind {
            JobKind::HybridWorker => hyb::run_worker(&job)?,
            _ => dist::run_worker(&job)?,
        };
        println!("{}", report.summary());
        return Ok(());
    }
    let port = cli.daemon_port.ok_or_else(|| BenchError::Usage("worker needs --daemon-port or --master".into()))?;
    let runner: JobRunner = Arc::new(move |job: &JobDescriptor| {
        let mut job = job.clone();
        if fail_after > 0 {
            job.fail_after = fail_after;
        }
        let r = run_job(&job);
        if r.is_err() && fail_after > 0 {
            // Mimic a crashed node: vanish without reporting.
            std::process::exit(3);
        }
        r
    });
    let daemon = ExecutableServer::with_runner(&format!("{}:{port}", cli.bind), runner)?;
    println!("listening on {}", daemon.local_addr());
    std::io::stdout().flush()?;
    daemon.wait();
    Ok(())
}

/// Entry point shared by the binary and tests; returns the text to print.
pub fn run(cli: &Cli) -> Result<Option<String>> {
    match cli.algo {
        Algo::DistWorker | Algo::HybWorker => serve(cli).map(|()| None),
        _ => compute(cli).map(|o| Some(format!("{}\n{}", report::HEADER, o.row))),
    }
}
