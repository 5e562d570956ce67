//! Report rows in the `nodes,ppn,time_ms,speedup,put,rem` layout.

use std::fmt;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;

use gb_core::GbStats;

use crate::error::{BenchError, Result};

pub const HEADER: &str = "nodes,ppn,time_ms,speedup,put,rem";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Row {
    pub nodes: usize,
    pub ppn: usize,
    pub time_ms: f64,
    pub speedup: Option<f64>,
    pub put: u64,
    pub rem: u64,
}

impl Row {
    pub fn from_stats(stats: &GbStats) -> Self {
        Row {
            nodes: stats.nodes,
            ppn: stats.threads_per_node,
            time_ms: stats.wall_ms,
            speedup: None,
            put: stats.put_count,
            rem: stats.rem_count,
        }
    }

    /// Sets the speedup against a baseline time; a 1/1 row is its own
    /// baseline.
    pub fn with_baseline(mut self, baseline_ms: Option<f64>) -> Self {
        self.speedup = match baseline_ms {
            Some(b) if self.time_ms > 0.0 => Some(b / self.time_ms),
            _ if self.nodes == 1 && self.ppn == 1 => Some(1.0),
            _ => None,
        };
        self
    }

    pub fn parse(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        let bad = || BenchError::Usage(format!("malformed report row `{line}`"));
        if f.len() != 6 {
            return Err(bad());
        }
        Ok(Row {
            nodes: f[0].parse().map_err(|_| bad())?,
            ppn: f[1].parse().map_err(|_| bad())?,
            time_ms: f[2].parse().map_err(|_| bad())?,
            speedup: if f[3].is_empty() { None } else { Some(f[3].parse().map_err(|_| bad())?) },
            put: f[4].parse().map_err(|_| bad())?,
            rem: f[5].parse().map_err(|_| bad())?,
        })
    }
}

impl fmt::Display for Row {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{:.0},", self.nodes, self.ppn, self.time_ms)?;
        if let Some(s) = self.speedup {
            write!(f, "{s:.2}")?;
        }
        write!(f, ",{},{}", self.put, self.rem)
    }
}

/// Appends `row`, writing the header first if the file is new or empty.
pub fn append(path: &Path, row: &Row) -> Result<()> {
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    if fresh {
        writeln!(f, "{HEADER}")?;
    }
    writeln!(f, "{row}")?;
    Ok(())
}

/// All rows of a report file.
pub fn read(path: &Path) -> Result<Vec<Row>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == HEADER => {}
        _ => return Err(BenchError::Usage(format!("{} is not a report file", path.display()))),
    }
    lines.map(Row::parse).collect()
}

/// The 1/1 time in the report at `path`; `None` if the file does not
/// exist yet or has no such row.
pub fn baseline(path: &Path) -> Result<Option<f64>> {
    if !path.exists() {
        return Ok(None);
    }
    Ok(read(path)?.into_iter().find(|r| r.nodes == 1 && r.ppn == 1).map(|r| r.time_ms))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_round_trip() {
        let r = Row { nodes: 2, ppn: 4, time_ms: 1234.4, speedup: Some(1.5), put: 10, rem: 20 };
        assert_eq!(r.to_string(), "2,4,1234,1.50,10,20");
        let back = Row::parse(&r.to_string()).unwrap();
        assert_eq!((back.nodes, back.ppn, back.put, back.rem), (2, 4, 10, 20));
        let none = Row { speedup: None, ..r };
        assert_eq!(none.to_string(), "2,4,1234,,10,20");
        assert_eq!(Row::parse("2,4,1234,,10,20").unwrap().speedup, None);
        assert!(Row::parse("1,2,3").is_err());
    }

    #[test]
    fn baseline_rules() {
        let r = Row { nodes: 1, ppn: 1, time_ms: 100.0, speedup: None, put: 1, rem: 1 };
        assert_eq!(r.with_baseline(None).speedup, Some(1.0));
        let r4 = Row { ppn: 4, time_ms: 50.0, ..r };
        assert_eq!(r4.with_baseline(None).speedup, None);
        assert_eq!(r4.with_baseline(Some(100.0)).speedup, Some(2.0));
    }

    #[test]
    fn append_writes_header_once() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let r = Row { nodes: 1, ppn: 1, time_ms: 100.0, speedup: Some(1.0), put: 1, rem: 2 };
        append(&p, &r).unwrap();
        append(&p, &Row { nodes: 0, ppn: 0, speedup: None, ..r }).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text, format!("{HEADER}\n1,1,100,1.00,1,2\n0,0,100,,1,2\n"));
        assert_eq!(read(&p).unwrap().len(), 2);
        assert_eq!(baseline(&p).unwrap(), Some(100.0));
        assert_eq!(baseline(&p.with_extension("missing")).unwrap(), None);
    }
}
