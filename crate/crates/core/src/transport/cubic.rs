use crate::time::SimTime;

/// Cubic window growth; windows are in bytes, the cubic curve in segments per second cubed.
#[derive(Clone, Debug, PartialEq)]
pub struct CubicState {
    pub w_max: f64,
    pub epoch_start: Option<SimTime>,
    /// Seconds from epoch start until the curve returns to `w_max`.
    pub k: f64,
    pub c_constant: f64,
    pub beta: f64,
    origin: f64,
    w_est: f64,
    pub hystart: Option<HyStart>,
}

impl CubicState {
    pub fn new(c_constant: f64, beta: f64) -> Self {
        CubicState { w_max: 0.0, epoch_start: None, k: 0.0, c_constant, beta, origin: 0.0, w_est: 0.0, hystart: None }
    }

    pub fn with_hystart(mut self) -> Self {
        self.hystart = Some(HyStart::default());
        self
    }

    /// Multiplicative decrease; returns the new ssthresh.
    pub fn on_loss(&mut self, cwnd: f64) -> f64 {
        self.w_max = cwnd;
        self.epoch_start = None;
        cwnd * self.beta
    }

    pub fn on_timeout(&mut self, cwnd: f64) {
        self.w_max = cwnd;
        self.epoch_start = None;
        if let Some(h) = &mut self.hystart {
            h.found = false;
        }
    }

    /// `W(t) = C (t - K)^3 + w_max`, in bytes, for `t` seconds since the epoch.
    pub fn window_at(&self, t: f64, mss: f64) -> f64 {
        let d = t - self.k;
        self.origin + self.c_constant * d * d * d * mss
    }

    fn start_epoch(&mut self, cwnd: f64, now: SimTime, mss: f64) {
        self.epoch_start = Some(now);
        if cwnd < self.w_max {
            self.k = ((self.w_max - cwnd) / mss / self.c_constant).cbrt();
            self.origin = self.w_max;
        } else {
            self.k = 0.0;
            self.origin = cwnd;
        }
        self.w_est = cwnd;
    }

    /// Congestion-avoidance growth for `acked` newly acknowledged bytes.
    pub fn on_ack(&mut self, cwnd: f64, acked: f64, now: SimTime, srtt: SimTime, mss: f64) -> f64 {
        if self.epoch_start.is_none() {
            self.start_epoch(cwnd, now, mss);
        }
        let epoch = self.epoch_start.unwrap_or(now);
        let t = (now + srtt).saturating_sub(epoch).as_secs_f64();
        let mut target = self.window_at(t, mss);

        let alpha = 3.0 * (1.0 - self.beta) / (1.0 + self.beta);
        self.w_est += alpha * mss * acked / cwnd;
        target = target.max(self.w_est);

        if target > cwnd {
            let inc = (target - cwnd) * acked / cwnd;
            cwnd + inc.min(acked / 2.0)
        } else {
            cwnd + 0.01 * mss * acked / cwnd
        }
    }
}

/// Hybrid slow start: leaves slow start once an ack train spans half the
/// minimum RTT or the round's RTT exceeds the minimum by a clamped threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct HyStart {
    /// Segments.
    pub low_window: f64,
    pub ack_delta: SimTime,
    pub delay_min_thresh: SimTime,
    pub delay_max_thresh: SimTime,
    pub min_samples: u32,
    pub found: bool,
    round_start: SimTime,
    last_ack: SimTime,
    end_seq: Option<u64>,
    curr_rtt: Option<SimTime>,
    samples: u32,
    delay_min: Option<SimTime>,
}

impl Default for HyStart {
    fn default() -> Self {
        HyStart {
            low_window: 16.0,
            ack_delta: SimTime::from_millis(2),
            delay_min_thresh: SimTime::from_millis(4),
            delay_max_thresh: SimTime::from_millis(16),
            min_samples: 8,
            found: false,
            round_start: SimTime::ZERO,
            last_ack: SimTime::ZERO,
            end_seq: None,
            curr_rtt: None,
            samples: 0,
            delay_min: None,
        }
    }
}

impl HyStart {
    fn reset_round(&mut self, now: SimTime, high_seq: u64) {
        self.round_start = now;
        self.last_ack = now;
        self.end_seq = Some(high_seq);
        self.curr_rtt = None;
        self.samples = 0;
    }

    pub fn observe_rtt(&mut self, rtt: SimTime) {
        self.delay_min = Some(self.delay_min.map_or(rtt, |d| d.min(rtt)));
    }

    /// Called per slow-start ack after `observe_rtt`; returns true when slow start should end.
    pub fn on_ack(
        &mut self,
        now: SimTime,
        snd_una: u64,
        high_seq: u64,
        rtt: Option<SimTime>,
        cwnd: f64,
        mss: f64,
    ) -> bool {
        if self.end_seq.is_none_or(|e| snd_una > e) {
            self.reset_round(now, high_seq);
        }
        let Some(delay_min) = self.delay_min else {
            return false;
        };
        if self.found || cwnd < self.low_window * mss {
            return false;
        }
        if now.saturating_sub(self.last_ack) <= self.ack_delta {
            self.last_ack = now;
            if now.saturating_sub(self.round_start) > delay_min / 2 {
                self.found = true;
            }
        }
        if let Some(r) = rtt {
            if self.samples < self.min_samples {
                self.curr_rtt = Some(self.curr_rtt.map_or(r, |c| c.min(r)));
                self.samples += 1;
            } else if let Some(c) = self.curr_rtt {
                let thresh = (delay_min / 8).clamp(self.delay_min_thresh, self.delay_max_thresh);
                if c > delay_min + thresh {
                    self.found = true;
                }
            }
        }
        self.found
    }
}
