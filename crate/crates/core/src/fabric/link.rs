use crate::time::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Link {
    pub rate_bps: u64,
    pub propagation_delay: SimTime,
}

impl Link {
    pub fn new(rate_bps: u64, propagation_delay: SimTime) -> Self {
        assert!(rate_bps > 0, "link rate must be positive");
        Link { rate_bps, propagation_delay }
    }

    pub fn serialization_delay(&self, bytes: u32) -> SimTime {
        serialization_delay(u64::from(bytes), self.rate_bps)
    }

    /// Time from the start of transmission until the last bit reaches the far end.
    pub fn delivery_delay(&self, bytes: u32) -> SimTime {
        self.serialization_delay(bytes) + self.propagation_delay
    }
}

/// `bytes * 8 / rate` in nanoseconds, rounded up to a whole nanosecond.
pub fn serialization_delay(bytes: u64, rate_bps: u64) -> SimTime {
    let bits = u128::from(bytes) * 8 * 1_000_000_000;
    let ns = bits.div_ceil(u128::from(rate_bps));
    SimTime::from_nanos(ns as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_frame_at_10g_is_1200ns() {
        let link = Link::new(10_000_000_000, SimTime::ZERO);
        assert_eq!(link.serialization_delay(1500), SimTime::from_nanos(1200));
        assert_eq!(link.delivery_delay(1500), SimTime::from_nanos(1200));
    }

    #[test]
    fn non_integral_delays_round_up() {
        // 64 B at 3 Gbps = 170.67 ns
        assert_eq!(serialization_delay(64, 3_000_000_000), SimTime::from_nanos(171));
    }
}
