use super::cubic::CubicState;
use super::ledbat::LedbatState;
use super::rto::{RtoPolicy, RttEstimator};
use super::scoreboard::RangeSet;
use super::tcplp::{LpSignal, TcpLpState};
use super::{Algorithm, LedbatConfig, TcpConfig, TcpLpConfig};
use crate::fabric::{AckHeader, SeqRange, MSS};
use crate::time::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    SlowStart,
    Avoidance,
    FastRecovery,
    RtoRecovery,
}

/// Window-adjustment policy layered on the shared loss-recovery machinery.
#[derive(Clone, Debug, PartialEq)]
pub enum Controller {
    NewReno,
    Cubic(CubicState),
    Ledbat(LedbatState),
    TcpLp { state: TcpLpState, inference_rtts: f64 },
}

impl Controller {
    pub fn from_tcp(cfg: &TcpConfig) -> Self {
        match cfg.algorithm {
            Algorithm::NewReno => Controller::NewReno,
            Algorithm::Cubic => {
                let c = CubicState::new(cfg.cubic_c, cfg.cubic_beta);
                Controller::Cubic(if cfg.hystart { c.with_hystart() } else { c })
            }
        }
    }

    pub fn ledbat(cfg: &LedbatConfig) -> Self {
        Controller::Ledbat(LedbatState::new(SimTime::from_micros(cfg.target_us), cfg.gain, cfg.delay_filter))
    }

    pub fn tcp_lp(cfg: &TcpLpConfig) -> Self {
        Controller::TcpLp { state: TcpLpState::new(cfg.delta), inference_rtts: cfg.inference_rtts }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Segment {
    pub seq: SeqRange,
    pub retransmission: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SenderStats {
    pub packets_sent: u64,
    pub retransmissions: u64,
    pub timeouts: u64,
    pub fast_recoveries: u64,
    /// Acks for data never sent; nonzero means a model bug.
    pub protocol_faults: u64,
    pub lp_halvings: u64,
    pub lp_collapses: u64,
}

/// Congestion-control state compared across a TCP+ pause.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CcSnapshot {
    pub cwnd_bits: u64,
    pub ssthresh_bits: u64,
    pub srtt: Option<SimTime>,
    pub rttvar: SimTime,
    pub scoreboard: Vec<SeqRange>,
}

#[derive(Clone, Debug)]
struct Frozen {
    rto_remaining: Option<SimTime>,
    acks: Vec<(SimTime, AckHeader)>,
}

#[derive(Clone, Debug)]
pub struct TcpSender {
    size: u64,
    mss: u64,
    sack: bool,
    dupthresh: u32,
    window_cap: f64,

    snd_una: u64,
    snd_nxt: u64,
    high_water: u64,
    cwnd: f64,
    ssthresh: f64,
    phase: Phase,
    dupacks: u32,
    recover: Option<u64>,
    scoreboard: RangeSet,
    rexmit_next: u64,
    loss_high: u64,
    /// Fast retransmit bypasses the window once.
    force_retransmit: bool,

    rtt: RttEstimator,
    rto: RtoPolicy,
    backoff: u32,
    rto_deadline: Option<SimTime>,

    controller: Controller,
    last_queuing_delay: SimTime,
    frozen: Option<Frozen>,
    stats: SenderStats,
}

impl TcpSender {
    pub fn new(size: u64, cfg: &TcpConfig, controller: Controller) -> Self {
        let mss = u64::from(MSS);
        TcpSender {
            size,
            mss,
            sack: cfg.sack_enabled,
            dupthresh: cfg.dupack_threshold.max(1),
            window_cap: cfg.send_buffer.min(cfg.receive_buffer) as f64,
            snd_una: 0,
            snd_nxt: 0,
            high_water: 0,
            cwnd: (u64::from(cfg.initial_window.max(1)) * mss) as f64,
            ssthresh: f64::INFINITY,
            phase: Phase::SlowStart,
            dupacks: 0,
            recover: None,
            scoreboard: RangeSet::new(),
            rexmit_next: 0,
            loss_high: 0,
            force_retransmit: false,
            rtt: RttEstimator::new(),
            rto: cfg.rto_policy(),
            backoff: 0,
            rto_deadline: None,
            controller,
            last_queuing_delay: SimTime::ZERO,
            frozen: None,
            stats: SenderStats::default(),
        }
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn cwnd(&self) -> f64 {
        self.cwnd
    }

    pub fn ssthresh(&self) -> f64 {
        self.ssthresh
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn snd_una(&self) -> u64 {
        self.snd_una
    }

    pub fn snd_nxt(&self) -> u64 {
        self.snd_nxt
    }

    pub fn dupacks(&self) -> u32 {
        self.dupacks
    }

    pub fn srtt(&self) -> Option<SimTime> {
        self.rtt.srtt()
    }

    pub fn rttvar(&self) -> SimTime {
        self.rtt.rttvar()
    }

    pub fn backoff(&self) -> u32 {
        self.backoff
    }

    pub fn scoreboard(&self) -> &RangeSet {
        &self.scoreboard
    }

    pub fn controller(&self) -> &Controller {
        &self.controller
    }

    pub fn stats(&self) -> &SenderStats {
        &self.stats
    }

    pub fn is_complete(&self) -> bool {
        self.snd_una >= self.size
    }

    pub fn is_paused(&self) -> bool {
        self.frozen.is_some()
    }

    pub fn rto_deadline(&self) -> Option<SimTime> {
        self.rto_deadline
    }

    pub fn current_rto(&self) -> SimTime {
        self.rto.current(&self.rtt, self.backoff)
    }

    pub fn snapshot(&self) -> CcSnapshot {
        CcSnapshot {
            cwnd_bits: self.cwnd.to_bits(),
            ssthresh_bits: self.ssthresh.to_bits(),
            srtt: self.rtt.srtt(),
            rttvar: self.rtt.rttvar(),
            scoreboard: self.scoreboard.ranges().to_vec(),
        }
    }

    fn segment_at(&self, start: u64) -> SeqRange {
        SeqRange::new(start, (start + self.mss).min(self.size))
    }

    fn next_hole(&self) -> Option<SeqRange> {
        let from = self.rexmit_next.max(self.snd_una);
        self.scoreboard.first_gap(from, self.loss_high).map(|g| self.segment_at(g.start))
    }

    /// Bytes believed to be in the network.
    pub fn pipe(&self) -> u64 {
        let outstanding = self.snd_nxt.saturating_sub(self.snd_una);
        let from = self.rexmit_next.max(self.snd_una);
        let lost = if self.loss_high > from {
            (self.loss_high - from) - self.scoreboard.covered(from, self.loss_high)
        } else {
            0
        };
        let dup_credit =
            if !self.sack && self.phase == Phase::FastRecovery { u64::from(self.dupacks) * self.mss } else { 0 };
        outstanding.saturating_sub(self.scoreboard.total_bytes()).saturating_sub(lost).saturating_sub(dup_credit)
    }

    /// Next segment allowed by the window, if any.
    pub fn next_segment(&mut self, now: SimTime) -> Option<Segment> {
        if self.frozen.is_some() || self.is_complete() {
            return None;
        }
        let (seq, from_hole) = match self.next_hole() {
            Some(h) => (h, true),
            None if self.snd_nxt < self.size => (self.segment_at(self.snd_nxt), false),
            None => return None,
        };
        let limit = self.cwnd.min(self.window_cap);
        let forced = from_hole && self.force_retransmit;
        if !forced && (self.pipe() + seq.len()) as f64 > limit {
            return None;
        }
        self.force_retransmit = false;
        if from_hole {
            self.rexmit_next = seq.end;
        } else {
            self.snd_nxt = seq.end;
        }
        let retransmission = seq.start < self.high_water;
        self.high_water = self.high_water.max(seq.end);
        self.stats.packets_sent += 1;
        if retransmission {
            self.stats.retransmissions += 1;
        }
        if self.rto_deadline.is_none() {
            self.rto_deadline = Some(now + self.current_rto());
        }
        Some(Segment { seq, retransmission })
    }

    pub fn on_ack(&mut self, ack: &AckHeader, now: SimTime) {
        if let Some(f) = self.frozen.as_mut() {
            f.acks.push((now, *ack));
            return;
        }
        self.process_ack(ack, now, now);
    }

    /// `arrived` is when the ack reached the host; `now` differs from it only
    /// for acks replayed after a pause.
    fn process_ack(&mut self, ack: &AckHeader, now: SimTime, arrived: SimTime) {
        let cum = ack.cumulative;
        if cum > self.high_water {
            self.stats.protocol_faults += 1;
            return;
        }
        if cum < self.snd_una {
            return;
        }

        let mut sack_new = false;
        if self.sack {
            for b in ack.sack.as_slice() {
                let r = SeqRange::new(b.start.max(cum), b.end.min(self.high_water));
                if !r.is_empty() && self.scoreboard.insert(r) > 0 {
                    sack_new = true;
                }
            }
        }

        let signal = self.observe_delay(ack, arrived);

        if cum > self.snd_una {
            let newly = cum - self.snd_una;
            self.snd_una = cum;
            self.scoreboard.remove_below(cum);
            self.snd_nxt = self.snd_nxt.max(cum);
            self.rexmit_next = self.rexmit_next.max(cum);
            self.loss_high = self.loss_high.max(cum);
            let sample = (ack.echo_sent_at <= arrived).then(|| arrived - ack.echo_sent_at);
            if let Some(r) = sample {
                self.rtt.sample(r);
            }
            self.backoff = 0;
            self.dupacks = 0;

            match self.phase {
                Phase::FastRecovery => {
                    self.hystart(arrived, sample);
                    if self.recover.is_some_and(|r| self.snd_una >= r) {
                        self.cwnd = self.ssthresh.max(self.mss as f64);
                        self.phase = self.open_phase();
                    } else if !self.sack {
                        // partial ack: the next segment is also lost
                        let next = self.segment_at(self.snd_una);
                        self.loss_high = self.loss_high.max(next.end);
                    } else if let Some(h) = self.scoreboard.highest_end() {
                        self.loss_high = self.loss_high.max(h);
                    }
                }
                Phase::RtoRecovery => {
                    self.hystart(arrived, sample);
                    self.grow(newly, arrived);
                    if self.recover.is_some_and(|r| self.snd_una >= r) {
                        self.phase = self.open_phase();
                    }
                }
                Phase::SlowStart | Phase::Avoidance => {
                    self.apply_lp(signal);
                    self.hystart(arrived, sample);
                    self.grow(newly, arrived);
                }
            }

            self.rto_deadline = if self.is_complete() || self.snd_una >= self.high_water {
                None
            } else {
                Some(now + self.current_rto())
            };
        } else if self.snd_nxt > self.snd_una || self.high_water > self.snd_una {
            if !self.sack || sack_new {
                self.dupacks += 1;
            }
            match self.phase {
                Phase::SlowStart | Phase::Avoidance => {
                    self.apply_lp(signal);
                    let guard = self.recover.is_none_or(|r| self.snd_una >= r);
                    if self.dupacks >= self.dupthresh && guard {
                        self.enter_fast_recovery();
                    }
                }
                Phase::FastRecovery => {
                    if let Some(h) = self.scoreboard.highest_end() {
                        self.loss_high = self.loss_high.max(h);
                    }
                }
                Phase::RtoRecovery => {}
            }
        }
    }

    fn hystart(&mut self, now: SimTime, rtt: Option<SimTime>) {
        let (una, high, cwnd, mss) = (self.snd_una, self.high_water, self.cwnd, self.mss as f64);
        let Controller::Cubic(CubicState { hystart: Some(h), .. }) = &mut self.controller else {
            return;
        };
        if let Some(r) = rtt {
            h.observe_rtt(r);
        }
        if self.phase == Phase::SlowStart && h.on_ack(now, una, high, rtt, cwnd, mss) {
            self.ssthresh = cwnd;
            self.phase = Phase::Avoidance;
        }
    }

    fn open_phase(&self) -> Phase {
        if self.cwnd < self.ssthresh {
            Phase::SlowStart
        } else {
            Phase::Avoidance
        }
    }

    fn observe_delay(&mut self, ack: &AckHeader, now: SimTime) -> LpSignal {
        let srtt = self.rtt.srtt();
        match &mut self.controller {
            Controller::Ledbat(l) => {
                self.last_queuing_delay = l.observe(ack.one_way_delay);
                LpSignal::None
            }
            Controller::TcpLp { state, inference_rtts } => {
                let base = srtt.unwrap_or(ack.one_way_delay * 2);
                let window = SimTime::from_secs_f64(base.as_secs_f64() * *inference_rtts);
                state.observe(ack.one_way_delay, now, window)
            }
            _ => LpSignal::None,
        }
    }

    fn apply_lp(&mut self, signal: LpSignal) {
        let mss = self.mss as f64;
        match signal {
            LpSignal::None => {}
            LpSignal::Halve => {
                self.stats.lp_halvings += 1;
                self.cwnd = (self.cwnd / 2.0).max(mss);
                self.ssthresh = self.cwnd.max(2.0 * mss);
                self.phase = self.open_phase();
            }
            LpSignal::Collapse => {
                self.stats.lp_collapses += 1;
                self.ssthresh = self.cwnd.max(2.0 * mss);
                self.cwnd = mss;
                self.phase = self.open_phase();
            }
        }
    }

    fn grow(&mut self, acked: u64, now: SimTime) {
        let mss = self.mss as f64;
        let acked = acked as f64;
        if let Controller::TcpLp { state, .. } = &self.controller {
            if state.in_inference(now) {
                return;
            }
        }
        if self.cwnd < self.ssthresh {
            if let Controller::Ledbat(l) = &self.controller {
                if self.last_queuing_delay >= l.target {
                    self.ssthresh = self.cwnd;
                    if self.phase == Phase::SlowStart {
                        self.phase = Phase::Avoidance;
                    }
                    return;
                }
            }
            self.cwnd = (self.cwnd + acked).min(self.ssthresh);
        } else {
            let srtt = self.rtt.srtt().unwrap_or(SimTime::ZERO);
            self.cwnd = match &mut self.controller {
                Controller::NewReno | Controller::TcpLp { .. } => self.cwnd + mss * acked / self.cwnd,
                Controller::Cubic(c) => c.on_ack(self.cwnd, acked, now, srtt, mss),
                Controller::Ledbat(l) => l.update(self.cwnd, self.last_queuing_delay, acked, mss),
            };
        }
        self.cwnd = self.cwnd.clamp(mss, self.window_cap.max(mss));
        if self.phase == Phase::SlowStart && self.cwnd >= self.ssthresh {
            self.phase = Phase::Avoidance;
        }
    }

    fn enter_fast_recovery(&mut self) {
        let mss = self.mss as f64;
        self.stats.fast_recoveries += 1;
        self.recover = Some(self.snd_nxt.max(self.high_water));
        let target = match &mut self.controller {
            Controller::Cubic(c) => c.on_loss(self.cwnd),
            _ => self.cwnd / 2.0,
        };
        self.ssthresh = target.max(2.0 * mss);
        self.cwnd = self.ssthresh;
        self.phase = Phase::FastRecovery;
        self.force_retransmit = true;
        self.rexmit_next = self.snd_una;
        let head = self.segment_at(self.snd_una).end;
        self.loss_high = if self.sack { self.scoreboard.highest_end().unwrap_or(head).max(head) } else { head };
    }

    /// Fires the retransmission timer if it is due; returns whether it fired.
    pub fn on_timeout(&mut self, now: SimTime) -> bool {
        let Some(deadline) = self.rto_deadline else {
            return false;
        };
        if now < deadline || self.frozen.is_some() {
            return false;
        }
        if self.snd_una >= self.high_water {
            self.rto_deadline = None;
            return false;
        }
        let mss = self.mss as f64;
        self.stats.timeouts += 1;
        if let Controller::Cubic(c) = &mut self.controller {
            c.on_timeout(self.cwnd);
        }
        self.ssthresh = (self.cwnd / 2.0).max(2.0 * mss);
        self.cwnd = mss;
        self.phase = Phase::RtoRecovery;
        self.force_retransmit = false;
        self.recover = Some(self.high_water);
        self.dupacks = 0;
        self.backoff = self.backoff.saturating_add(1);
        self.rexmit_next = self.snd_una;
        if self.sack {
            self.loss_high = self.snd_nxt;
        } else {
            self.snd_nxt = self.snd_una;
            self.loss_high = self.snd_una;
        }
        self.rto_deadline = Some(now + self.current_rto());
        true
    }

    /// Freezes transmission and the retransmission timer; acks are held.
    pub fn pause(&mut self, now: SimTime) {
        if self.frozen.is_some() {
            return;
        }
        let rto_remaining = self.rto_deadline.take().map(|d| d.saturating_sub(now));
        self.frozen = Some(Frozen { rto_remaining, acks: Vec::new() });
    }

    /// Restores the timer with its remaining time and replays held acks.
    pub fn resume(&mut self, now: SimTime) {
        let Some(f) = self.frozen.take() else {
            return;
        };
        self.rto_deadline = f.rto_remaining.map(|r| now + r);
        for (arrived, ack) in f.acks {
            self.process_ack(&ack, now, arrived);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fabric::SackBlocks;
    use crate::transport::TcpReceiver;

    const M: u64 = MSS as u64;

    fn cfg(algorithm: Algorithm, sack: bool) -> TcpConfig {
        TcpConfig { algorithm, sack_enabled: sack, ..TcpConfig::default() }
    }

    fn newreno(size: u64, sack: bool) -> TcpSender {
        let c = cfg(Algorithm::NewReno, sack);
        TcpSender::new(size, &c, Controller::from_tcp(&c))
    }

    fn drain(s: &mut TcpSender, now: SimTime) -> Vec<Segment> {
        std::iter::from_fn(|| s.next_segment(now)).collect()
    }

    fn ack(cum: u64, acked: SeqRange, sack: &[SeqRange], sent: SimTime) -> AckHeader {
        AckHeader {
            cumulative: cum,
            acked,
            sack: sack.iter().copied().collect::<SackBlocks>(),
            echo_sent_at: sent,
            one_way_delay: SimTime::from_micros(50),
        }
    }

    #[test]
    fn initial_window_is_two_packets() {
        let mut s = newreno(100 * M, true);
        let segs = drain(&mut s, SimTime::ZERO);
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[1].seq, SeqRange::new(M, 2 * M));
        assert!(drain(&mut s, SimTime::ZERO).is_empty());
    }

    #[test]
    fn slow_start_doubles() {
        let mut s = newreno(100 * M, true);
        drain(&mut s, SimTime::ZERO);
        let t = SimTime::from_micros(100);
        s.on_ack(&ack(M, SeqRange::new(0, M), &[], SimTime::ZERO), t);
        s.on_ack(&ack(2 * M, SeqRange::new(M, 2 * M), &[], SimTime::ZERO), t);
        assert_eq!(s.cwnd(), (4 * M) as f64);
        assert_eq!(s.srtt(), Some(SimTime::from_micros(100)));
        assert_eq!(drain(&mut s, t).len(), 4);
    }

    #[test]
    fn third_dupack_halves_newreno() {
        let c = cfg(Algorithm::NewReno, false);
        let mut s = TcpSender::new(1000 * M, &c, Controller::NewReno);
        s.cwnd = 65536.0;
        s.ssthresh = 65536.0;
        s.phase = Phase::Avoidance;
        let segs = drain(&mut s, SimTime::ZERO);
        assert!(segs.len() >= 4);
        let t = SimTime::from_micros(100);
        for i in 1..=3 {
            let a = ack(0, SeqRange::new(i * M, (i + 1) * M), &[], SimTime::ZERO);
            s.on_ack(&a, t);
        }
        assert_eq!(s.phase(), Phase::FastRecovery);
        assert_eq!(s.ssthresh(), 32768.0);
        let r = s.next_segment(t).unwrap();
        assert!(r.retransmission);
        assert_eq!(r.seq, SeqRange::new(0, M));
    }

    #[test]
    fn sack_hole_is_retransmitted_first() {
        let mut s = newreno(5 * M, true);
        s.cwnd = (5 * M) as f64;
        assert_eq!(drain(&mut s, SimTime::ZERO).len(), 5);
        let t = SimTime::from_micros(100);
        s.on_ack(&ack(M, SeqRange::new(0, M), &[], SimTime::ZERO), t);
        // [1460, 2920) is lost; everything above it is SACKed
        for i in 2..5 {
            let blk = SeqRange::new(2 * M, (i + 1) * M);
            s.on_ack(&ack(M, SeqRange::new(i * M, (i + 1) * M), &[blk], SimTime::ZERO), t);
        }
        assert_eq!(s.phase(), Phase::FastRecovery);
        let r = s.next_segment(t).unwrap();
        assert_eq!(r.seq, SeqRange::new(M, 2 * M));
        assert!(r.retransmission);
        assert!(s.next_segment(t).is_none());
        // a repeated report carries no new information
        let blk = SeqRange::new(2 * M, 5 * M);
        s.on_ack(&ack(M, SeqRange::new(4 * M, 5 * M), &[blk], SimTime::ZERO), t);
        assert_eq!(s.dupacks(), 3);
        // the single retransmission completes the flow
        s.on_ack(&ack(5 * M, r.seq, &[], t), SimTime::from_micros(200));
        assert!(s.is_complete());
        assert_eq!(s.stats().retransmissions, 1);
        assert_eq!(s.rto_deadline(), None);
    }

    #[test]
    fn ack_beyond_sent_is_a_fault() {
        let mut s = newreno(10 * M, true);
        drain(&mut s, SimTime::ZERO);
        s.on_ack(&ack(5 * M, SeqRange::new(0, M), &[], SimTime::ZERO), SimTime::ZERO);
        assert_eq!(s.stats().protocol_faults, 1);
        assert_eq!(s.snd_una(), 0);
    }

    #[test]
    fn timeout_collapses_and_retransmits_head() {
        let mut s = newreno(10 * M, true);
        drain(&mut s, SimTime::ZERO);
        assert_eq!(s.rto_deadline(), Some(SimTime::from_millis(1)));
        assert!(!s.on_timeout(SimTime::from_micros(999)));
        assert!(s.on_timeout(SimTime::from_millis(1)));
        assert_eq!(s.cwnd(), M as f64);
        assert_eq!(s.phase(), Phase::RtoRecovery);
        assert_eq!(s.rto_deadline(), Some(SimTime::from_millis(3)));
        let r = s.next_segment(SimTime::from_millis(1)).unwrap();
        assert_eq!(r.seq, SeqRange::new(0, M));
        assert!(r.retransmission);
        assert!(s.next_segment(SimTime::from_millis(1)).is_none());
    }

    #[test]
    fn timeout_during_fast_recovery_collapses() {
        let mut s = newreno(100 * M, false);
        s.cwnd = (10 * M) as f64;
        drain(&mut s, SimTime::ZERO);
        for i in 1..=3 {
            s.on_ack(&ack(0, SeqRange::new(i * M, (i + 1) * M), &[], SimTime::ZERO), SimTime::ZERO);
        }
        assert_eq!(s.phase(), Phase::FastRecovery);
        assert!(s.on_timeout(SimTime::from_millis(1)));
        assert_eq!(s.cwnd(), M as f64);
        assert_eq!(s.phase(), Phase::RtoRecovery);
    }

    #[test]
    fn pause_freezes_state_bitwise() {
        let c = cfg(Algorithm::Cubic, true);
        let mut s = TcpSender::new(1000 * M, &c, Controller::from_tcp(&c));
        let mut now = SimTime::ZERO;
        let mut r = TcpReceiver::new();
        for _ in 0..6 {
            let segs = drain(&mut s, now);
            now += SimTime::from_micros(100);
            for g in segs {
                let a = r.on_data(g.seq, now - SimTime::from_micros(100), now, true);
                s.on_ack(&a, now);
            }
        }
        let segs = drain(&mut s, now);
        assert!(!segs.is_empty());
        let sent_before = s.stats().packets_sent;
        let before = s.snapshot();
        let deadline = s.rto_deadline().unwrap();
        s.pause(now);
        assert!(s.next_segment(now).is_none());
        // acks that arrive while paused are held
        let arrive = now + SimTime::from_micros(100);
        for g in &segs {
            let a = r.on_data(g.seq, now, arrive, true);
            s.on_ack(&a, arrive);
        }
        assert!(!s.on_timeout(now + SimTime::from_millis(50)));
        assert_eq!(s.snapshot(), before);
        assert_eq!(s.stats().packets_sent, sent_before);

        let mut idle = s.clone();
        let later = now + SimTime::from_millis(5);
        s.resume(later);
        assert_eq!(s.snd_una(), segs.last().unwrap().seq.end);
        // the held acks were timed by their arrival, not by the resume
        assert!(s.srtt().unwrap() < SimTime::from_micros(200));
        assert!(s.next_segment(later).is_some());

        // with nothing held, resume restores the timer's remaining time
        idle.frozen.as_mut().unwrap().acks.clear();
        idle.resume(later);
        assert_eq!(idle.snapshot(), before);
        assert_eq!(idle.rto_deadline(), Some(deadline + SimTime::from_millis(5)));
    }
}
