//! Exact-arithmetic Gröbner bases via Buchberger's algorithm.
//!
//! The crate provides coefficient fields ([`arith`]), sparse multivariate
//! polynomials ([`poly`]), normal forms ([`reduce`]), the critical-pair work
//! queue ([`pairs`]) and two drivers: the sequential reference
//! ([`gb_seq`]) and a shared-memory parallel variant ([`gb_par`]).

pub mod arith;
pub mod error;
pub mod gb_par;
pub mod gb_seq;
pub mod pairs;
pub mod poly;
pub mod reduce;
pub mod systems;

pub use arith::{Field, FieldDescriptor, ModularField, Rational, RationalField};
pub use error::{GbError, Result};
pub use gb_par::{drive_workers, gb_parallel, gb_parallel_with, termination_check, ParConfig};
pub use gb_seq::{gb_sequential, gb_sequential_with, reduced_gb, GbStats, Prepared};
pub use pairs::{CriticalPair, PairList, PairListConfig, PairOrder, Selection, TieBreak};
pub use poly::{parse_system, ExpVec, PolyRing, Polynomial, RingDescriptor, System, TermOrder};
pub use reduce::{normal_form, BasisView};
