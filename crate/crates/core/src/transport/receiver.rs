use super::scoreboard::RangeSet;
use crate::fabric::{AckHeader, SackBlocks, SeqRange};
use crate::time::SimTime;

/// Cumulative-ack receiver with SACK reporting; acks every segment.
#[derive(Clone, Debug, Default)]
pub struct TcpReceiver {
    rcv_nxt: u64,
    out_of_order: RangeSet,
    bytes_received: u64,
    duplicate_bytes: u64,
}

impl TcpReceiver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rcv_nxt(&self) -> u64 {
        self.rcv_nxt
    }

    /// Payload bytes that arrived (including duplicates).
    pub fn bytes_received(&self) -> u64 {
        self.bytes_received
    }

    pub fn duplicate_bytes(&self) -> u64 {
        self.duplicate_bytes
    }

    pub fn on_data(&mut self, seq: SeqRange, sent_at: SimTime, now: SimTime, sack: bool) -> AckHeader {
        self.bytes_received += seq.len();
        if seq.end <= self.rcv_nxt || self.out_of_order.contains(seq) {
            self.duplicate_bytes += seq.len();
        }
        if seq.start <= self.rcv_nxt && seq.end > self.rcv_nxt {
            self.rcv_nxt = seq.end;
            while let Some(r) = self.out_of_order.pop_front_if_reaches(self.rcv_nxt) {
                self.rcv_nxt = self.rcv_nxt.max(r.end);
            }
            self.out_of_order.remove_below(self.rcv_nxt);
        } else if seq.start > self.rcv_nxt {
            self.out_of_order.insert(seq);
        }

        let blocks = if sack { self.sack_blocks(seq) } else { SackBlocks::default() };
        AckHeader {
            cumulative: self.rcv_nxt,
            acked: seq,
            sack: blocks,
            echo_sent_at: sent_at,
            one_way_delay: now.saturating_sub(sent_at),
        }
    }

    /// Block holding the latest segment first, then the highest remaining blocks.
    fn sack_blocks(&self, latest: SeqRange) -> SackBlocks {
        let ranges = self.out_of_order.ranges();
        let mut out = SackBlocks::default();
        let first = ranges.iter().position(|r| r.start <= latest.start && latest.end <= r.end);
        if let Some(i) = first {
            out.push(ranges[i]);
        }
        for (i, r) in ranges.iter().enumerate().rev() {
            if Some(i) == first {
                continue;
            }
            if !out.push(*r) {
                break;
            }
        }
        out
    }
}
