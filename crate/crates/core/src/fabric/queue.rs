use std::collections::VecDeque;

use super::packet::{Packet, MTU};
use super::FabricError;
use crate::time::SimTime;

/// Static carve-up of one port's buffer among priority classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BufferPartition {
    pub port_total: u64,
    pub per_class: Vec<u64>,
}

impl BufferPartition {
    pub fn new(port_total: u64, per_class: Vec<u64>) -> Result<Self, FabricError> {
        let sum: u64 = per_class.iter().sum();
        if per_class.is_empty() {
            return Err(FabricError::NoClasses);
        }
        if sum > port_total {
            return Err(FabricError::Overcommitted { sum, port_total });
        }
        Ok(BufferPartition { port_total, per_class })
    }

    pub fn classes(&self) -> usize {
        self.per_class.len()
    }
}

/// Deficit round robin state; realizes weighted fair queueing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Drr {
    weights: Vec<u32>,
    quantum: u32,
    deficits: Vec<u64>,
    cursor: usize,
    credited: bool,
}

impl Drr {
    /// `quantum` bytes are credited per weight unit per visit.
    pub fn new(weights: Vec<u32>, quantum: u32) -> Self {
        let n = weights.len();
        Drr { weights, quantum, deficits: vec![0; n], cursor: 0, credited: false }
    }

    pub fn with_mtu_quantum(weights: Vec<u32>) -> Self {
        Drr::new(weights, MTU)
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    fn advance(&mut self) {
        self.cursor = (self.cursor + 1) % self.weights.len();
        self.credited = false;
    }

    fn select(&mut self, queues: &[ClassQueue]) -> usize {
        debug_assert!(queues.iter().any(|q| !q.packets.is_empty()));
        loop {
            let c = self.cursor;
            let q = &queues[c];
            let Some(head) = q.packets.front() else {
                self.deficits[c] = 0;
                self.advance();
                continue;
            };
            if !self.credited {
                self.deficits[c] += u64::from(self.quantum) * u64::from(self.weights[c]);
                self.credited = true;
            }
            let size = u64::from(head.size);
            if size <= self.deficits[c] {
                self.deficits[c] -= size;
                if q.packets.len() == 1 {
                    self.deficits[c] = 0;
                    self.advance();
                }
                return c;
            }
            self.advance();
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SchedulerPolicy {
    StrictPriority,
    WeightedFair(Drr),
    /// Every class shares one FIFO queue sized to the whole port buffer.
    Fifo,
}

#[derive(Clone, Debug)]
pub(crate) struct ClassQueue {
    packets: VecDeque<Packet>,
    bytes: u64,
    capacity: u64,
    ecn_threshold: u64,
}

impl ClassQueue {
    fn new(capacity: u64, ecn_threshold: u64) -> Self {
        ClassQueue { packets: VecDeque::new(), bytes: 0, capacity, ecn_threshold }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PortStats {
    pub enqueued_bytes: u64,
    pub dequeued_bytes: u64,
    pub dropped_bytes: u64,
    pub enqueued_packets: u64,
    pub dropped_packets: u64,
    pub marked_packets: u64,
}

#[derive(Debug, PartialEq, Eq)]
pub enum Admission {
    Accepted,
    Dropped(Packet),
}

impl Admission {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Admission::Accepted)
    }
}

/// Per-port set of class queues plus the scheduler that drains them.
#[derive(Clone, Debug)]
pub struct PortQueueSet {
    queues: Vec<ClassQueue>,
    declared_classes: usize,
    policy: SchedulerPolicy,
    stats: PortStats,
}

impl PortQueueSet {
    /// ECN thresholds are `ecn_fraction` of each queue's byte capacity.
    pub fn new(partition: &BufferPartition, policy: SchedulerPolicy, ecn_fraction: f64) -> Result<Self, FabricError> {
        let declared_classes = partition.classes();
        if let SchedulerPolicy::WeightedFair(drr) = &policy {
            if drr.weights.len() != declared_classes {
                return Err(FabricError::WeightCount { weights: drr.weights.len(), classes: declared_classes });
            }
            if drr.weights.contains(&0) {
                return Err(FabricError::ZeroWeight);
            }
        }
        let threshold = |cap: u64| (cap as f64 * ecn_fraction).round() as u64;
        let queues = match policy {
            SchedulerPolicy::Fifo => vec![ClassQueue::new(partition.port_total, threshold(partition.port_total))],
            _ => partition.per_class.iter().map(|&cap| ClassQueue::new(cap, threshold(cap))).collect(),
        };
        Ok(PortQueueSet { queues, declared_classes, policy, stats: PortStats::default() })
    }

    pub fn classes(&self) -> usize {
        self.declared_classes
    }

    fn queue_index(&self, class: u8) -> Result<usize, FabricError> {
        let c = class as usize;
        if c >= self.declared_classes {
            return Err(FabricError::UnknownClass(class));
        }
        Ok(match self.policy {
            SchedulerPolicy::Fifo => 0,
            _ => c,
        })
    }

    /// Drop-tail admission with ECN marking on the admitted packet.
    pub fn enqueue(&mut self, mut pkt: Packet, now: SimTime) -> Result<Admission, FabricError> {
        let qi = self.queue_index(pkt.class)?;
        let size = u64::from(pkt.size);
        let q = &self.queues[qi];
        if q.bytes + size > q.capacity {
            self.stats.dropped_bytes += size;
            self.stats.dropped_packets += 1;
            return Ok(Admission::Dropped(pkt));
        }
        if pkt.ecn_capable {
            // Probes report on the high-priority queue regardless of mapping.
            let reference = if pkt.is_probe() { &self.queues[0] } else { q };
            if reference.bytes >= reference.ecn_threshold {
                pkt.ecn_marked = true;
                self.stats.marked_packets += 1;
            }
        }
        pkt.enqueued_at = now;
        let q = &mut self.queues[qi];
        q.bytes += size;
        q.packets.push_back(pkt);
        self.stats.enqueued_bytes += size;
        self.stats.enqueued_packets += 1;
        Ok(Admission::Accepted)
    }

    pub fn dequeue(&mut self) -> Option<Packet> {
        let qi = match &mut self.policy {
            SchedulerPolicy::Fifo => 0,
            SchedulerPolicy::StrictPriority => self.queues.iter().position(|q| !q.packets.is_empty())?,
            SchedulerPolicy::WeightedFair(drr) => {
                if self.queues.iter().all(|q| q.packets.is_empty()) {
                    return None;
                }
                drr.select(&self.queues)
            }
        };
        let q = &mut self.queues[qi];
        let pkt = q.packets.pop_front()?;
        q.bytes -= u64::from(pkt.size);
        self.stats.dequeued_bytes += u64::from(pkt.size);
        Some(pkt)
    }

    pub fn is_empty(&self) -> bool {
        self.queues.iter().all(|q| q.packets.is_empty())
    }

    pub fn total_bytes(&self) -> u64 {
        self.queues.iter().map(|q| q.bytes).sum()
    }

    /// Resident bytes in the queue serving `class`.
    pub fn class_bytes(&self, class: u8) -> u64 {
        match self.queue_index(class) {
            Ok(qi) => self.queues[qi].bytes,
            Err(_) => 0,
        }
    }

    pub fn class_packets(&self, class: u8) -> usize {
        match self.queue_index(class) {
            Ok(qi) => self.queues[qi].packets.len(),
            Err(_) => 0,
        }
    }

    pub fn class_capacity(&self, class: u8) -> u64 {
        match self.queue_index(class) {
            Ok(qi) => self.queues[qi].capacity,
            Err(_) => 0,
        }
    }

    pub fn ecn_threshold(&self, class: u8) -> u64 {
        match self.queue_index(class) {
            Ok(qi) => self.queues[qi].ecn_threshold,
            Err(_) => 0,
        }
    }

    pub fn stats(&self) -> PortStats {
        self.stats
    }

    pub fn policy(&self) -> &SchedulerPolicy {
        &self.policy
    }
}
