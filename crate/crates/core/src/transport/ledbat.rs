use std::collections::VecDeque;

use crate::time::SimTime;

#[derive(Clone, Debug, PartialEq)]
pub struct LedbatState {
    pub base_delay: Option<SimTime>,
    current: VecDeque<SimTime>,
    filter_len: usize,
    pub target: SimTime,
    pub gain: f64,
}

impl LedbatState {
    pub fn new(target: SimTime, gain: f64, filter_len: usize) -> Self {
        LedbatState {
            base_delay: None,
            current: VecDeque::with_capacity(filter_len.max(1)),
            filter_len: filter_len.max(1),
            target,
            gain,
        }
    }

    /// Feeds a one-way delay sample and returns the estimated queuing delay.
    pub fn observe(&mut self, one_way_delay: SimTime) -> SimTime {
        let base = match self.base_delay {
            Some(b) => b.min(one_way_delay),
            None => one_way_delay,
        };
        self.base_delay = Some(base);
        if self.current.len() == self.filter_len {
            self.current.pop_front();
        }
        self.current.push_back(one_way_delay);
        let current = self.current.iter().copied().min().unwrap_or(one_way_delay);
        current.saturating_sub(base)
    }

    /// Window after `acked` bytes arrive with the given queuing delay.
    pub fn update(&self, cwnd: f64, queuing_delay: SimTime, acked: f64, mss: f64) -> f64 {
        let target = self.target.as_nanos() as f64;
        let off_target = (target - queuing_delay.as_nanos() as f64) / target;
        let next = cwnd + self.gain * off_target * acked * mss / cwnd;
        next.max(mss)
    }
}
