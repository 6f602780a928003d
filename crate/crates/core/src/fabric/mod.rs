//! Hosts, links and the switch port model.

mod host;
mod link;
mod packet;
mod queue;

use thiserror::Error;

pub use host::{HostEgress, DEFAULT_DRIVER_QUEUE_PACKETS};
pub use link::{serialization_delay, Link};
pub use packet::{
    AckHeader, FlowId, NodeId, Packet, PacketKind, SackBlocks, SeqRange, ACK_BYTES, HEADER_BYTES, MAX_SACK_BLOCKS, MSS,
    MTU, PROBE_BYTES,
};
pub use queue::{Admission, BufferPartition, Drr, PortQueueSet, PortStats, SchedulerPolicy};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FabricError {
    #[error("packet class {0} is not configured on this port")]
    UnknownClass(u8),
    #[error("buffer partition needs at least one class")]
    NoClasses,
    #[error("class allocations sum to {sum} B, above the port total of {port_total} B")]
    Overcommitted { sum: u64, port_total: u64 },
    #[error("{weights} WFQ weights given for {classes} classes")]
    WeightCount { weights: usize, classes: usize },
    #[error("WFQ weights must be positive")]
    ZeroWeight,
    #[error("driver queue must hold at least one packet")]
    EmptyDriverQueue,
}
