use crate::time::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpSignal {
    None,
    /// First early-congestion indication: halve the window.
    Halve,
    /// Indication inside the inference window: collapse to one segment.
    Collapse,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TcpLpState {
    pub delta: f64,
    sowd: Option<f64>,
    min_delay: Option<SimTime>,
    max_delay: Option<SimTime>,
    inference_until: Option<SimTime>,
}

impl TcpLpState {
    pub fn new(delta: f64) -> Self {
        TcpLpState { delta, sowd: None, min_delay: None, max_delay: None, inference_until: None }
    }

    pub fn smoothed_delay(&self) -> Option<f64> {
        self.sowd
    }

    pub fn in_inference(&self, now: SimTime) -> bool {
        self.inference_until.is_some_and(|t| now < t)
    }

    pub fn threshold(&self) -> Option<f64> {
        let lo = self.min_delay?.as_nanos() as f64;
        let hi = self.max_delay?.as_nanos() as f64;
        Some(lo + self.delta * (hi - lo))
    }

    pub fn observe(&mut self, one_way_delay: SimTime, now: SimTime, inference: SimTime) -> LpSignal {
        self.min_delay = Some(self.min_delay.map_or(one_way_delay, |m| m.min(one_way_delay)));
        self.max_delay = Some(self.max_delay.map_or(one_way_delay, |m| m.max(one_way_delay)));
        let x = one_way_delay.as_nanos() as f64;
        let sowd = match self.sowd {
            Some(s) => s + (x - s) / 8.0,
            None => x,
        };
        self.sowd = Some(sowd);

        let Some(threshold) = self.threshold() else {
            return LpSignal::None;
        };
        if self.min_delay == self.max_delay || sowd <= threshold {
            return LpSignal::None;
        }
        let signal = if self.in_inference(now) { LpSignal::Collapse } else { LpSignal::Halve };
        self.inference_until = Some(now + inference);
        signal
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_delays_never_signal() {
        let mut lp = TcpLpState::new(0.15);
        for i in 0..100 {
            let s = lp.observe(SimTime::from_micros(50), SimTime::from_micros(i), SimTime::from_micros(100));
            assert_eq!(s, LpSignal::None);
        }
    }

    #[test]
    fn scripted_trace() {
        let mut lp = TcpLpState::new(0.15);
        let inf = SimTime::from_micros(100);
        let t = SimTime::from_micros;
        // min 50us, max 150us, threshold 65us
        assert_eq!(lp.observe(t(50), t(0), inf), LpSignal::None);
        // sowd = 50 + 100/8 = 62.5
        assert_eq!(lp.observe(t(150), t(1), inf), LpSignal::None);
        // sowd = 62.5 - 12.5/8 = 60.9375
        assert_eq!(lp.observe(t(50), t(2), inf), LpSignal::None);
        // sowd = 60.9375 + 89.0625/8 = 72.07 > 65
        assert_eq!(lp.observe(t(150), t(10), inf), LpSignal::Halve);
        assert!(lp.in_inference(t(50)));
        assert_eq!(lp.observe(t(150), t(60), inf), LpSignal::Collapse);
    }
}
