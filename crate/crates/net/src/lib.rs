//! Communication middleware and distributed Gröbner basis drivers.
//!
//! * [`frame`]: length-prefixed frames, the only wire unit.
//! * [`channel`]: one TCP connection multiplexed by message tags.
//! * [`dht`]: an append-only table replicated from a master to clients.
//! * [`exec`]: a job daemon and the pool that places jobs on daemons.
//! * [`dist`] and [`hyb`]: the distributed and distributed hybrid
//!   Buchberger masters and workers.

pub mod channel;
pub mod dht;
pub mod dist;
pub mod error;
pub mod exec;
pub mod frame;
pub mod hyb;
pub mod local;
pub mod master;
pub mod msg;
mod worker;

pub use channel::{ChannelStats, ChannelTag, Direction, Tap, TaggedChannel};
pub use dht::{DhtBasis, DhtClient, DhtMaster, LinkStats};
pub use dist::gb_distributed_master;
pub use error::{NetError, Result};
pub use exec::{run_job, DistThreadPool, ExecutableServer, JobDescriptor, JobHandle, JobKind};
pub use hyb::gb_hybrid_master;
pub use local::{ClusterRun, LocalCluster, Variant};
pub use master::{MasterConfig, MasterEndpoint, NodeReport, RunReport};
pub use worker::WorkerReport;
pub use frame::{Frame, FrameKind};
pub use msg::Msg;
