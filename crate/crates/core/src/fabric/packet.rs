use serde::{Deserialize, Serialize};

use crate::time::SimTime;

pub const MTU: u32 = 1500;
pub const HEADER_BYTES: u32 = 40;
pub const MSS: u32 = MTU - HEADER_BYTES;
pub const ACK_BYTES: u32 = 64;
pub const PROBE_BYTES: u32 = 64;
pub const MAX_SACK_BLOCKS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FlowId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u16);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Half-open byte range `[start, end)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SeqRange {
    pub start: u64,
    pub end: u64,
}

impl SeqRange {
    pub const fn new(start: u64, end: u64) -> Self {
        SeqRange { start, end }
    }

    pub fn len(&self) -> u64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Up to [`MAX_SACK_BLOCKS`] selective-ack blocks, most relevant first.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SackBlocks {
    blocks: [SeqRange; MAX_SACK_BLOCKS],
    len: u8,
}

impl SackBlocks {
    pub fn push(&mut self, block: SeqRange) -> bool {
        if (self.len as usize) < MAX_SACK_BLOCKS {
            self.blocks[self.len as usize] = block;
            self.len += 1;
            true
        } else {
            false
        }
    }

    pub fn as_slice(&self) -> &[SeqRange] {
        &self.blocks[..self.len as usize]
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

impl FromIterator<SeqRange> for SackBlocks {
    fn from_iter<I: IntoIterator<Item = SeqRange>>(iter: I) -> Self {
        let mut s = SackBlocks::default();
        for b in iter {
            if !s.push(b) {
                break;
            }
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AckHeader {
    /// Next byte expected by the receiver.
    pub cumulative: u64,
    /// The data segment that triggered this ack.
    pub acked: SeqRange,
    pub sack: SackBlocks,
    /// `sent_at` of the triggering data segment (timestamp echo).
    pub echo_sent_at: SimTime,
    /// Sender-to-receiver delay of the triggering segment.
    pub one_way_delay: SimTime,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PacketKind {
    Data { seq: SeqRange },
    Ack(AckHeader),
    Probe { seq: u32 },
    ProbeEcho { seq: u32, marked: bool },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Packet {
    pub flow: FlowId,
    pub src: NodeId,
    pub dst: NodeId,
    /// 0 is the highest priority.
    pub class: u8,
    pub size: u32,
    pub ecn_capable: bool,
    pub ecn_marked: bool,
    pub kind: PacketKind,
    pub sent_at: SimTime,
    pub enqueued_at: SimTime,
}

impl Packet {
    pub fn data(flow: FlowId, src: NodeId, dst: NodeId, class: u8, seq: SeqRange) -> Packet {
        debug_assert!(seq.len() <= u64::from(MSS));
        Packet {
            flow,
            src,
            dst,
            class,
            size: seq.len() as u32 + HEADER_BYTES,
            ecn_capable: false,
            ecn_marked: false,
            kind: PacketKind::Data { seq },
            sent_at: SimTime::ZERO,
            enqueued_at: SimTime::ZERO,
        }
    }

    pub fn ack(flow: FlowId, src: NodeId, dst: NodeId, class: u8, header: AckHeader) -> Packet {
        Packet {
            flow,
            src,
            dst,
            class,
            size: ACK_BYTES,
            ecn_capable: false,
            ecn_marked: false,
            kind: PacketKind::Ack(header),
            sent_at: SimTime::ZERO,
            enqueued_at: SimTime::ZERO,
        }
    }

    /// Probes always travel in class 0 and are ECN-capable.
    pub fn probe(src: NodeId, dst: NodeId, seq: u32, size: u32) -> Packet {
        Packet {
            flow: FlowId(u32::MAX),
            src,
            dst,
            class: 0,
            size,
            ecn_capable: true,
            ecn_marked: false,
            kind: PacketKind::Probe { seq },
            sent_at: SimTime::ZERO,
            enqueued_at: SimTime::ZERO,
        }
    }

    pub fn probe_echo(src: NodeId, dst: NodeId, seq: u32, marked: bool, size: u32) -> Packet {
        Packet {
            flow: FlowId(u32::MAX),
            src,
            dst,
            class: 0,
            size,
            ecn_capable: false,
            ecn_marked: false,
            kind: PacketKind::ProbeEcho { seq, marked },
            sent_at: SimTime::ZERO,
            enqueued_at: SimTime::ZERO,
        }
    }

    pub fn is_probe(&self) -> bool {
        matches!(self.kind, PacketKind::Probe { .. })
    }

    pub fn seq_range(&self) -> Option<SeqRange> {
        match self.kind {
            PacketKind::Data { seq } => Some(seq),
            _ => None,
        }
    }
}
