use crate::time::SimTime;

/// `max(0, R - sum_{c<i} B_c/T - sum_{c<=i} Q_c/T) / flows`, in bits per second.
///
/// `bytes_prev[c]` is what class `c` sent during the last round and
/// `queue_now[c]` its backlog at the round boundary.
pub fn fair_rate(
    rate_bps: f64,
    round: SimTime,
    bytes_prev: &[u64],
    queue_now: &[u64],
    class: usize,
    flows: u32,
) -> f64 {
    assert!(flows > 0, "fair rate asked for a class with no flows");
    let t_ns = round.as_nanos() as f64;
    let higher: u64 = bytes_prev[..class].iter().sum();
    let queued: u64 = queue_now[..=class].iter().sum();
    let spare = rate_bps - higher as f64 * 8e9 / t_ns - queued as f64 * 8e9 / t_ns;
    spare.max(0.0) / f64::from(flows)
}

/// Per-link load, backlog and flow-count bookkeeping for the rate oracle.
#[derive(Clone, Debug)]
pub struct LinkTracker {
    rate_bps: f64,
    round: SimTime,
    sent_this_round: Vec<u64>,
    bytes_prev: Vec<u64>,
    queue_now: Vec<u64>,
    flows: Vec<u32>,
}

impl LinkTracker {
    pub fn new(rate_bps: u64, round: SimTime, classes: usize) -> Self {
        assert!(round > SimTime::ZERO);
        LinkTracker {
            rate_bps: rate_bps as f64,
            round,
            sent_this_round: vec![0; classes],
            bytes_prev: vec![0; classes],
            queue_now: vec![0; classes],
            flows: vec![0; classes],
        }
    }

    pub fn round(&self) -> SimTime {
        self.round
    }

    pub fn record_tx(&mut self, class: u8, bytes: u32) {
        self.sent_this_round[class as usize] += u64::from(bytes);
    }

    /// Ends the round: last round's bytes and the current backlog become the inputs.
    pub fn roll(&mut self, queue_bytes: impl Fn(u8) -> u64) {
        std::mem::swap(&mut self.bytes_prev, &mut self.sent_this_round);
        self.sent_this_round.iter_mut().for_each(|b| *b = 0);
        for (c, q) in self.queue_now.iter_mut().enumerate() {
            *q = queue_bytes(c as u8);
        }
    }

    pub fn add_flow(&mut self, class: u8) {
        self.flows[class as usize] += 1;
    }

    pub fn remove_flow(&mut self, class: u8) {
        let f = &mut self.flows[class as usize];
        *f = f.saturating_sub(1);
    }

    pub fn flow_count(&self, class: u8) -> u32 {
        self.flows[class as usize]
    }

    pub fn bytes_prev(&self) -> &[u64] {
        &self.bytes_prev
    }

    pub fn queue_now(&self) -> &[u64] {
        &self.queue_now
    }

    /// None when no flow of `class` uses the link.
    pub fn fair_rate(&self, class: u8) -> Option<f64> {
        let flows = self.flow_count(class);
        (flows > 0)
            .then(|| fair_rate(self.rate_bps, self.round, &self.bytes_prev, &self.queue_now, class as usize, flows))
    }
}

/// The minimum fair rate over a flow's path.
pub fn path_rate<'a>(links: impl IntoIterator<Item = &'a LinkTracker>, class: u8) -> f64 {
    links.into_iter().map(|l| l.fair_rate(class).unwrap_or(l.rate_bps)).fold(f64::INFINITY, f64::min)
}
