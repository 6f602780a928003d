use crate::fabric::{NodeId, Packet};
use crate::time::SimTime;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ProbeFeedback {
    #[default]
    None,
    Marked,
    Unmarked,
}

/// Cross-queue probe loop shared by all TCP+ flows between one host pair.
#[derive(Clone, Debug)]
pub struct ProbeChannel {
    pub src: NodeId,
    pub dst: NodeId,
    pub probe_interval: SimTime,
    pub probe_bytes: u32,
    next_seq: u32,
    newest_seq: Option<u32>,
    paused: bool,
    last_probe_feedback: ProbeFeedback,
    pub probes_sent: u64,
    pub pauses: u64,
}

impl ProbeChannel {
    pub fn new(src: NodeId, dst: NodeId, probe_interval: SimTime, probe_bytes: u32) -> Self {
        ProbeChannel {
            src,
            dst,
            probe_interval,
            probe_bytes,
            next_seq: 0,
            newest_seq: None,
            paused: false,
            last_probe_feedback: ProbeFeedback::None,
            probes_sent: 0,
            pauses: 0,
        }
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    pub fn last_probe_feedback(&self) -> ProbeFeedback {
        self.last_probe_feedback
    }

    /// The next probe to send.
    pub fn tick(&mut self) -> Packet {
        let seq = self.next_seq;
        self.next_seq = self.next_seq.wrapping_add(1);
        self.probes_sent += 1;
        Packet::probe(self.src, self.dst, seq, self.probe_bytes)
    }

    /// Applies an echo; returns the new pause state if it changed.
    ///
    /// Echoes older than the newest one already applied are ignored, so a
    /// pause always reflects the latest feedback received.
    pub fn feedback(&mut self, seq: u32, marked: bool) -> Option<bool> {
        if self.newest_seq.is_some_and(|n| seq <= n) {
            return None;
        }
        self.newest_seq = Some(seq);
        self.last_probe_feedback = if marked { ProbeFeedback::Marked } else { ProbeFeedback::Unmarked };
        if marked == self.paused {
            return None;
        }
        self.paused = marked;
        if marked {
            self.pauses += 1;
        }
        Some(marked)
    }
}
