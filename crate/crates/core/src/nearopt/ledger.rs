use std::collections::HashSet;

use crate::fabric::{FlowId, SeqRange};

/// Registry of every packet the fabric dropped, keyed by flow and exact byte range.
#[derive(Clone, Debug, Default)]
pub struct LossLedger {
    dropped: HashSet<(FlowId, u64, u64)>,
    reported: u64,
}

impl LossLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns false if the key was already present.
    pub fn record_drop(&mut self, flow: FlowId, seq: SeqRange) -> bool {
        self.reported += 1;
        self.dropped.insert((flow, seq.start, seq.end))
    }

    pub fn is_lost(&self, flow: FlowId, seq: SeqRange) -> bool {
        self.dropped.contains(&(flow, seq.start, seq.end))
    }

    /// Consumes a drop so a later drop of the retransmission registers anew.
    pub fn take(&mut self, flow: FlowId, seq: SeqRange) -> bool {
        self.dropped.remove(&(flow, seq.start, seq.end))
    }

    /// Entries not yet consumed.
    pub fn len(&self) -> usize {
        self.dropped.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dropped.is_empty()
    }

    /// Drop reports received, duplicates included.
    pub fn reports(&self) -> u64 {
        self.reported
    }
}
