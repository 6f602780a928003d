use std::collections::VecDeque;

use super::ledger::LossLedger;
use crate::fabric::{AckHeader, FlowId, SeqRange, HEADER_BYTES, MSS};
use crate::time::SimTime;
use crate::transport::RangeSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PaceDecision {
    Send {
        seq: SeqRange,
        retransmission: bool,
    },
    /// Pacing gap not yet elapsed.
    WaitUntil(SimTime),
    /// Nothing sendable until an ack, a timeout or a rate change.
    Blocked,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NearOptStats {
    pub packets_sent: u64,
    pub retransmissions: u64,
    /// Timer expiries that found no validated loss.
    pub stalls: u64,
    pub validated_losses: u64,
}

/// Paced sender driven by oracle rate and loss information.
#[derive(Clone, Debug)]
pub struct NearOptSender {
    flow: FlowId,
    size: u64,
    mss: u64,
    snd_nxt: u64,
    cum: u64,
    sacked: RangeSet,
    rate_bps: f64,
    next_send_at: SimTime,
    /// Time and wire size of the last packet sent.
    last_send: Option<(SimTime, u32)>,
    retx: VecDeque<SeqRange>,
    timeout: SimTime,
    deadline: Option<SimTime>,
    inflight_cap: u64,
    stats: NearOptStats,
}

impl NearOptSender {
    pub fn new(flow: FlowId, size: u64, timeout: SimTime, inflight_cap: u64) -> Self {
        NearOptSender {
            flow,
            size,
            mss: u64::from(MSS),
            snd_nxt: 0,
            cum: 0,
            sacked: RangeSet::new(),
            rate_bps: 0.0,
            next_send_at: SimTime::ZERO,
            last_send: None,
            retx: VecDeque::new(),
            timeout,
            deadline: None,
            inflight_cap: inflight_cap.max(u64::from(MSS)),
            stats: NearOptStats::default(),
        }
    }

    pub fn rate_bps(&self) -> f64 {
        self.rate_bps
    }

    /// The gap to the next packet follows the new rate at once.
    pub fn set_rate(&mut self, rate_bps: f64) {
        self.rate_bps = rate_bps.max(0.0);
        if let Some((at, wire)) = self.last_send {
            if let Some(g) = self.gap(wire) {
                self.next_send_at = at + g;
            }
        }
    }

    pub fn stats(&self) -> &NearOptStats {
        &self.stats
    }

    pub fn is_complete(&self) -> bool {
        self.cum >= self.size
    }

    pub fn deadline(&self) -> Option<SimTime> {
        self.deadline
    }

    pub fn inflight(&self) -> u64 {
        (self.snd_nxt - self.cum).saturating_sub(self.sacked.total_bytes())
    }

    /// Inter-packet gap for a packet of `wire_bytes` at the current rate.
    pub fn gap(&self, wire_bytes: u32) -> Option<SimTime> {
        (self.rate_bps > 0.0).then(|| SimTime::from_nanos((f64::from(wire_bytes) * 8e9 / self.rate_bps).ceil() as u64))
    }

    fn segment_at(&self, start: u64) -> SeqRange {
        SeqRange::new(start, (start + self.mss).min(self.size))
    }

    pub fn poll(&mut self, now: SimTime) -> PaceDecision {
        if self.is_complete() {
            return PaceDecision::Blocked;
        }
        if now < self.next_send_at {
            return PaceDecision::WaitUntil(self.next_send_at);
        }
        if self.rate_bps <= 0.0 {
            return PaceDecision::Blocked;
        }
        let (seq, retransmission) = loop {
            match self.retx.pop_front() {
                Some(r) if r.end <= self.cum || self.sacked.contains(r) => continue,
                Some(r) => break (r, true),
                None => {
                    if self.snd_nxt >= self.size {
                        return PaceDecision::Blocked;
                    }
                    let s = self.segment_at(self.snd_nxt);
                    if self.inflight() + s.len() > self.inflight_cap {
                        return PaceDecision::Blocked;
                    }
                    self.snd_nxt = s.end;
                    break (s, false);
                }
            }
        };
        let wire = seq.len() as u32 + HEADER_BYTES;
        self.next_send_at = now + self.gap(wire).unwrap_or(SimTime::ZERO);
        self.last_send = Some((now, wire));
        self.stats.packets_sent += 1;
        if retransmission {
            self.stats.retransmissions += 1;
        }
        if self.deadline.is_none() {
            self.deadline = Some(now + self.timeout);
        }
        PaceDecision::Send { seq, retransmission }
    }

    pub fn on_ack(&mut self, ack: &AckHeader, now: SimTime) {
        for b in ack.sack.as_slice() {
            let r = SeqRange::new(b.start.max(ack.cumulative), b.end.min(self.snd_nxt));
            if !r.is_empty() {
                self.sacked.insert(r);
            }
        }
        if ack.cumulative > self.cum && ack.cumulative <= self.snd_nxt {
            self.cum = ack.cumulative;
            self.sacked.remove_below(self.cum);
            self.deadline = (self.cum < self.snd_nxt).then(|| now + self.timeout);
        }
    }

    /// On expiry, queues every outstanding segment the ledger confirms as
    /// dropped; otherwise just re-arms. Returns whether anything was queued.
    pub fn on_timeout(&mut self, now: SimTime, ledger: &mut LossLedger) -> bool {
        match self.deadline {
            Some(d) if now >= d => {}
            _ => return false,
        }
        let mut queued = false;
        let mut at = self.cum;
        while at < self.snd_nxt {
            let seg = self.segment_at(at);
            if !self.sacked.contains(seg) && ledger.take(self.flow, seg) {
                self.retx.push_back(seg);
                self.stats.validated_losses += 1;
                queued = true;
            }
            at = seg.end;
        }
        if !queued {
            self.stats.stalls += 1;
        }
        self.deadline = (self.cum < self.snd_nxt).then(|| now + self.timeout);
        queued
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fabric::SackBlocks;

    const M: u64 = MSS as u64;

    fn ack(cum: u64) -> AckHeader {
        AckHeader {
            cumulative: cum,
            acked: SeqRange::new(0, 0),
            sack: SackBlocks::default(),
            echo_sent_at: SimTime::ZERO,
            one_way_delay: SimTime::ZERO,
        }
    }

    #[test]
    fn three_gbps_gap_is_four_us() {
        let mut s = NearOptSender::new(FlowId(0), 10 * M, SimTime::from_millis(1), 1 << 20);
        s.set_rate(3e9);
        assert_eq!(s.gap(1500), Some(SimTime::from_micros(4)));
        assert!(matches!(s.poll(SimTime::ZERO), PaceDecision::Send { .. }));
        assert_eq!(s.poll(SimTime::ZERO), PaceDecision::WaitUntil(SimTime::from_micros(4)));
        s.set_rate(6e9);
        assert!(matches!(s.poll(SimTime::from_micros(4)), PaceDecision::Send { .. }));
        assert_eq!(s.poll(SimTime::from_micros(4)), PaceDecision::WaitUntil(SimTime::from_micros(6)));
    }

    #[test]
    fn rate_change_moves_pending_send() {
        let mut s = NearOptSender::new(FlowId(0), 10 * M, SimTime::from_millis(1), 1 << 20);
        s.set_rate(1e6);
        assert!(matches!(s.poll(SimTime::ZERO), PaceDecision::Send { .. }));
        assert_eq!(s.poll(SimTime::ZERO), PaceDecision::WaitUntil(SimTime::from_millis(12)));
        s.set_rate(3e9);
        assert_eq!(s.poll(SimTime::from_micros(1)), PaceDecision::WaitUntil(SimTime::from_micros(4)));
    }

    #[test]
    fn zero_rate_suspends() {
        let mut s = NearOptSender::new(FlowId(0), 10 * M, SimTime::from_millis(1), 1 << 20);
        assert_eq!(s.poll(SimTime::ZERO), PaceDecision::Blocked);
        assert_eq!(s.stats().packets_sent, 0);
    }

    #[test]
    fn stall_rearms_without_retransmitting() {
        let mut ledger = LossLedger::new();
        let mut s = NearOptSender::new(FlowId(3), 4 * M, SimTime::from_millis(1), 1 << 20);
        s.set_rate(1e12);
        let mut t = SimTime::ZERO;
        for _ in 0..4 {
            assert!(matches!(s.poll(t), PaceDecision::Send { .. }));
            t += SimTime::from_nanos(12);
        }
        let fire = SimTime::from_millis(1);
        assert!(!s.on_timeout(fire, &mut ledger));
        assert_eq!(s.deadline(), Some(fire + SimTime::from_millis(1)));
        ledger.record_drop(FlowId(3), SeqRange::new(M, 2 * M));
        assert!(s.on_timeout(SimTime::from_millis(2), &mut ledger));
        match s.poll(SimTime::from_millis(2)) {
            PaceDecision::Send { seq, retransmission } => {
                assert_eq!(seq, SeqRange::new(M, 2 * M));
                assert!(retransmission);
            }
            other => panic!("{other:?}"),
        }
        // consumed: a second expiry does not retransmit again
        assert!(!s.on_timeout(SimTime::from_millis(3), &mut ledger));
        s.on_ack(&ack(4 * M), SimTime::from_millis(3));
        assert!(s.is_complete());
        assert_eq!(s.stats().retransmissions, 1);
    }
}
