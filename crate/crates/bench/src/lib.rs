//! Front end and benchmark harness for the Gröbner basis engines.

pub mod cli;
pub mod error;
pub mod harness;
pub mod report;

pub use error::{BenchError, Result};
pub use report::Row;
