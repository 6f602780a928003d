use std::collections::VecDeque;

use super::packet::Packet;
use super::queue::{Admission, BufferPartition, PortQueueSet, SchedulerPolicy};
use super::FabricError;
use crate::time::SimTime;

pub const DEFAULT_DRIVER_QUEUE_PACKETS: usize = 100;

/// A host's egress path: per-class queues feeding a bounded FIFO driver queue.
///
/// The driver queue only admits a packet when every class queue ahead of it
/// is empty, and refills through the host scheduler, so a low-priority packet
/// never enters the driver queue while a high-priority one is waiting.
#[derive(Clone, Debug)]
pub struct HostEgress {
    classes: PortQueueSet,
    driver: VecDeque<Packet>,
    driver_limit: usize,
    driver_class_bytes: Vec<u64>,
    local_drops: u64,
}

impl HostEgress {
    pub fn new(partition: &BufferPartition, policy: SchedulerPolicy, driver_limit: usize) -> Result<Self, FabricError> {
        if driver_limit == 0 {
            return Err(FabricError::EmptyDriverQueue);
        }
        let classes = PortQueueSet::new(partition, policy, 1.0)?;
        let n = classes.classes();
        Ok(HostEgress {
            classes,
            driver: VecDeque::with_capacity(driver_limit),
            driver_limit,
            driver_class_bytes: vec![0; n],
            local_drops: 0,
        })
    }

    pub fn enqueue(&mut self, pkt: Packet, now: SimTime) -> Result<Admission, FabricError> {
        if pkt.class as usize >= self.classes.classes() {
            return Err(FabricError::UnknownClass(pkt.class));
        }
        if self.driver.len() < self.driver_limit && self.classes.is_empty() {
            self.push_driver(pkt, now);
            return Ok(Admission::Accepted);
        }
        let out = self.classes.enqueue(pkt, now)?;
        if !out.is_accepted() {
            self.local_drops += 1;
        }
        Ok(out)
    }

    /// Next packet for the NIC; refills the driver queue from the class queues.
    pub fn dequeue(&mut self) -> Option<Packet> {
        let pkt = self.driver.pop_front()?;
        self.driver_class_bytes[pkt.class as usize] -= u64::from(pkt.size);
        if let Some(next) = self.classes.dequeue() {
            let at = next.enqueued_at;
            self.push_driver(next, at);
        }
        Some(pkt)
    }

    fn push_driver(&mut self, mut pkt: Packet, now: SimTime) {
        pkt.enqueued_at = now;
        self.driver_class_bytes[pkt.class as usize] += u64::from(pkt.size);
        self.driver.push_back(pkt);
    }

    pub fn is_empty(&self) -> bool {
        self.driver.is_empty()
    }

    pub fn driver_len(&self) -> usize {
        self.driver.len()
    }

    /// Bytes of `class` waiting anywhere on the host egress path.
    pub fn class_bytes(&self, class: u8) -> u64 {
        self.classes.class_bytes(class) + self.driver_class_bytes.get(class as usize).copied().unwrap_or(0)
    }

    pub fn local_drops(&self) -> u64 {
        self.local_drops
    }

    pub fn classes(&self) -> usize {
        self.classes.classes()
    }
}
