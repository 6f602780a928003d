use crate::time::SimTime;

/// Smoothed RTT estimator (RFC 6298 gains: alpha = 1/8, beta = 1/4).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RttEstimator {
    srtt: Option<SimTime>,
    rttvar: SimTime,
}

impl RttEstimator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sample(&mut self, rtt: SimTime) {
        match self.srtt {
            None => {
                self.srtt = Some(rtt);
                self.rttvar = SimTime::from_nanos(rtt.as_nanos() / 2);
            }
            Some(srtt) => {
                let s = srtt.as_nanos();
                let r = rtt.as_nanos();
                let err = s.abs_diff(r);
                self.rttvar = SimTime::from_nanos((3 * self.rttvar.as_nanos() + err) / 4);
                self.srtt = Some(SimTime::from_nanos((7 * s + r) / 8));
            }
        }
    }

    pub fn srtt(&self) -> Option<SimTime> {
        self.srtt
    }

    pub fn rttvar(&self) -> SimTime {
        self.rttvar
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RtoPolicy {
    pub rto_min: SimTime,
    pub max_rto: SimTime,
    /// Used until the first RTT sample.
    pub initial_rto: SimTime,
}

impl RtoPolicy {
    /// Timeout for the current estimator state after `backoff` consecutive expiries.
    pub fn current(&self, est: &RttEstimator, backoff: u32) -> SimTime {
        let base = match est.srtt() {
            Some(srtt) => compute_rto(srtt, est.rttvar(), self),
            None => self.initial_rto.max(self.rto_min).min(self.max_rto),
        };
        backed_off(base, backoff, self.max_rto)
    }
}

/// `max(rto_min, srtt + 4 * rttvar)`, capped at `max_rto`.
pub fn compute_rto(srtt: SimTime, rttvar: SimTime, policy: &RtoPolicy) -> SimTime {
    let raw = srtt + rttvar * 4;
    raw.max(policy.rto_min).min(policy.max_rto)
}

/// Doubles `rto` per consecutive timeout, capped at `max_rto`.
pub fn backed_off(rto: SimTime, exponent: u32, max_rto: SimTime) -> SimTime {
    let factor = 1u64.checked_shl(exponent.min(63)).unwrap_or(u64::MAX);
    let ns = rto.as_nanos().saturating_mul(factor);
    SimTime::from_nanos(ns).min(max_rto.max(rto))
}
