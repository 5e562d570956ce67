use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, ValueEnum};
use gb_bench::harness::{ClusterSpec, ClusterVariant, Harness};
use gb_bench::report;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Variant {
    Dist,
    Hyb,
}

/// Runs a master and worker daemons as local processes and checks the
/// result against a sequential run.
#[derive(Debug, Parser)]
#[command(name = "gb-cluster", version)]
struct Args {
    #[arg(long, value_enum, default_value = "hyb")]
    variant: Variant,
    #[arg(long, default_value_t = 1)]
    nodes: usize,
    /// Threads per node (hyb only).
    #[arg(long, default_value_t = 1)]
    ppn: usize,
    /// Repeat the run and report the spread of the counters.
    #[arg(long, default_value_t = 1)]
    repeat: usize,
    /// Make the last node die after this many pairs.
    #[arg(long)]
    die_after_pairs: Option<u64>,
    /// Seconds allowed per `gb` run.
    #[arg(long, default_value_t = 600)]
    timeout: u64,
    /// Append master rows to this CSV file.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Path of the `gb` binary; defaults to the one next to this program.
    #[arg(long)]
    gb: Option<PathBuf>,
    /// Problem flags for `gb`, e.g. `-- --system katsura:6 --field Zp`.
    #[arg(last = true, required = true)]
    problem: Vec<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let harness = match &args.gb {
        Some(p) => Harness::new(p),
        None => match Harness::sibling() {
            Ok(h) => h,
            Err(e) => {
                eprintln!("gb-cluster: {e}");
                return ExitCode::FAILURE;
            }
        },
    };
    let spec = ClusterSpec {
        variant: match args.variant {
            Variant::Dist => ClusterVariant::Dist,
            Variant::Hyb => ClusterVariant::Hyb,
        },
        nodes: args.nodes,
        ppn: args.ppn,
        problem: args.problem.clone(),
        die_after: args.die_after_pairs.map(|k| (args.nodes - 1, k)),
        timeout: Duration::from_secs(args.timeout),
    };
    println!("{}", report::HEADER);
    let mut rows = Vec::new();
    for _ in 0..args.repeat {
        match harness.run(&spec) {
            Ok(r) => {
                println!("{}", r.master);
                if let Some(p) = &args.report {
                    if let Err(e) = report::append(p, &r.master) {
                        eprintln!("gb-cluster: {e}");
                        return ExitCode::FAILURE;
                    }
                }
                rows.push(r.master);
            }
            Err(e) => {
                eprintln!("gb-cluster: {e}");
                return ExitCode::FAILURE;
            }
        }
    }
    let put = (rows.iter().map(|r| r.put).min().unwrap(), rows.iter().map(|r| r.put).max().unwrap());
    let rem = (rows.iter().map(|r| r.rem).min().unwrap(), rows.iter().map(|r| r.rem).max().unwrap());
    println!("verified: {} run(s) equal to the sequential basis; put {}..{}, rem {}..{}", rows.len(), put.0, put.1, rem.0, rem.1);
    ExitCode::SUCCESS
}
