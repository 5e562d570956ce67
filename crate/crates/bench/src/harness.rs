//! Localhost cluster harness: starts worker daemons as separate
//! processes, runs a master process against them, and checks the reduced
//! basis against a sequential run.

use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use crate::error::{BenchError, Result};
use crate::report::{self, Row};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClusterVariant {
    Dist,
    Hyb,
}

impl ClusterVariant {
    fn algos(self) -> (&'static str, &'static str) {
        match self {
            ClusterVariant::Dist => ("dist-master", "dist-worker"),
            ClusterVariant::Hyb => ("hyb-master", "hyb-worker"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ClusterSpec {
    pub variant: ClusterVariant,
    pub nodes: usize,
    pub ppn: usize,
    /// Problem flags passed to every `gb` run, e.g. `--system katsura:6`.
    pub problem: Vec<String>,
    /// `(node, pairs)`: that daemon dies after handling `pairs` pairs.
    pub die_after: Option<(usize, u64)>,
    pub timeout: Duration,
}

#[derive(Clone, Debug)]
pub struct ClusterReport {
    pub master: Row,
    pub sequential: Row,
    pub basis: String,
}

/// Kills its processes when dropped.
struct Daemons(Vec<Child>);

impl Drop for Daemons {
    fn drop(&mut self) {
        for c in &mut self.0 {
            let _ = c.kill();
            let _ = c.wait();
        }
    }
}

/// Drives the `gb` binary at `exe`.
pub struct Harness {
    exe: PathBuf,
}

impl Harness {
    pub fn new(exe: impl Into<PathBuf>) -> Self {
        Harness { exe: exe.into() }
    }

    /// The `gb` binary next to the running executable.
    pub fn sibling() -> Result<Self> {
        let me = std::env::current_exe()?;
        let dir = me.parent().ok_or_else(|| BenchError::Harness("no executable directory".into()))?;
        let exe = dir.join(format!("gb{}", std::env::consts::EXE_SUFFIX));
        if !exe.exists() {
            return Err(BenchError::Harness(format!("{} not found", exe.display())));
        }
        Ok(Harness::new(exe))
    }

    /// Starts a worker daemon on a free port and returns its address.
    fn spawn_daemon(&self, algo: &str, die_after: Option<u64>, log: &Path) -> Result<(Child, String)> {
        let mut cmd = Command::new(&self.exe);
        cmd.args(["--algo", algo, "--daemon-port", "0"]);
        if let Some(k) = die_after {
            cmd.args(["--die-after-pairs", &k.to_string()]);
        }
        let mut child = cmd.stdout(Stdio::piped()).stderr(File::create(log)?).spawn()?;
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap()).read_line(&mut line)?;
        match line.trim().strip_prefix("listening on ") {
            Some(addr) => Ok((child, addr.to_string())),
            None => {
                let _ = child.kill();
                Err(BenchError::Harness(format!("daemon did not start: {}", fs::read_to_string(log).unwrap_or_default())))
            }
        }
    }

    /// Runs `gb` with `args` to completion within `timeout`.
    fn run_gb(&self, args: &[String], dir: &Path, name: &str, timeout: Duration) -> Result<()> {
        let out = dir.join(format!("{name}.out"));
        let err = dir.join(format!("{name}.err"));
        let mut child = Command::new(&self.exe).args(args).stdout(File::create(&out)?).stderr(File::create(&err)?).spawn()?;
        let deadline = Instant::now() + timeout;
        let status = loop {
            if let Some(s) = child.try_wait()? {
                break s;
            }
            if Instant::now() >= deadline {
                let _ = child.kill();
                let _ = child.wait();
                return Err(BenchError::Harness(format!("{name} run timed out after {timeout:?}")));
            }
            thread::sleep(Duration::from_millis(10));
        };
        if !status.success() {
            return Err(BenchError::Harness(format!(
                "{name} run failed ({status}): {}",
                fs::read_to_string(&err).unwrap_or_default().trim()
            )));
        }
        Ok(())
    }

    /// Runs `gb` once with `algo` flags plus `problem`; returns its report
    /// row and basis text.
    pub fn solve(&self, algo: &[String], problem: &[String], timeout: Duration) -> Result<(Row, String)> {
        let dir = tempfile::tempdir()?;
        self.solve_in(dir.path(), "run", algo, problem, timeout)
    }

    fn solve_in(
        &self,
        dir: &Path,
        name: &str,
        algo: &[String],
        problem: &[String],
        timeout: Duration,
    ) -> Result<(Row, String)> {
        let basis = dir.join(format!("{name}.txt"));
        let csv = dir.join(format!("{name}.csv"));
        let mut args = algo.to_vec();
        args.extend([
            "--output".to_string(),
            basis.display().to_string(),
            "--report".to_string(),
            csv.display().to_string(),
        ]);
        args.extend(problem.iter().cloned());
        self.run_gb(&args, dir, name, timeout)?;
        let row = report::read(&csv)?.pop().ok_or_else(|| BenchError::Harness(format!("{name} wrote no report")))?;
        Ok((row, fs::read_to_string(basis)?))
    }

    /// One master run on `spec.nodes` daemon processes; returns the master's
    /// report row and basis text.
    pub fn run_cluster(&self, spec: &ClusterSpec) -> Result<(Row, String)> {
        let dir = tempfile::tempdir()?;
        let (master_algo, worker_algo) = spec.variant.algos();
        let mut daemons = Daemons(Vec::new());
        let mut addrs = Vec::new();
        for n in 0..spec.nodes {
            let die = spec.die_after.filter(|(node, _)| *node == n).map(|(_, k)| k);
            let (child, addr) = self.spawn_daemon(worker_algo, die, &dir.path().join(format!("daemon{n}.err")))?;
            daemons.0.push(child);
            addrs.push(addr);
        }
        let nodes_file = dir.path().join("nodes.txt");
        fs::write(&nodes_file, addrs.join("\n") + "\n")?;
        let algo = [
            "--algo".to_string(),
            master_algo.to_string(),
            "--nodes-file".to_string(),
            nodes_file.display().to_string(),
            "--threads".to_string(),
            spec.ppn.to_string(),
        ];
        self.solve_in(dir.path(), "master", &algo, &spec.problem, spec.timeout)
    }

    /// [`Harness::run_cluster`] checked against a sequential run of the same
    /// problem.
    pub fn run(&self, spec: &ClusterSpec) -> Result<ClusterReport> {
        let (master, basis) = self.run_cluster(spec)?;
        let (sequential, want) = self.solve(&["--algo".into(), "seq".into()], &spec.problem, spec.timeout)?;
        if basis != want {
            return Err(BenchError::Harness("reduced basis differs from the sequential one".into()));
        }
        Ok(ClusterReport { master, sequential, basis })
    }
}
