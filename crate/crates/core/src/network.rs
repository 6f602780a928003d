//! One switch, N hosts and the flows between them, driven by the event queue.
//!
//! Ports `0..N` are host uplinks (host i to the switch); ports `N..2N` are the
//! switch egress ports toward host `i - N`.

use std::collections::HashMap;

use thiserror::Error;

use crate::config::{ConfigError, Protocol, ScenarioConfig};
use crate::engine::{EventQueue, Ticket};
use crate::fabric::{
    Admission, FabricError, FlowId, HostEgress, Link, NodeId, Packet, PacketKind, PortQueueSet, SeqRange,
};
use crate::metrics::{
    record_completion, trace_fingerprint, CensoredFlow, FlowRecord, RunCounters, RunSummary, Utilization,
};
use crate::nearopt::{path_rate, LinkTracker, LossLedger, NearOptSender, PaceDecision};
use crate::time::SimTime;
use crate::transport::{Controller, ProbeChannel, TcpReceiver, TcpSender};
use crate::workloads::FlowSpec;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("fabric setup: {0}")]
    Fabric(#[from] FabricError),
    #[error("bad trace: {0}")]
    Trace(String),
}

#[derive(Clone, Copy, Debug)]
enum Event {
    FlowStart,
    TxDone(u32),
    /// `pkt` reaches the far end of `port`.
    Deliver {
        port: u32,
        pkt: Packet,
    },
    Rto(u32),
    Pace(u32),
    Probe(u32),
    Roll,
}

enum Egress {
    Host(HostEgress),
    Switch(PortQueueSet),
}

impl Egress {
    fn enqueue(&mut self, pkt: Packet, now: SimTime) -> Admission {
        let r = match self {
            Egress::Host(h) => h.enqueue(pkt, now),
            Egress::Switch(s) => s.enqueue(pkt, now),
        };
        r.expect("packet classes are validated against the config")
    }

    fn dequeue(&mut self) -> Option<Packet> {
        match self {
            Egress::Host(h) => h.dequeue(),
            Egress::Switch(s) => s.dequeue(),
        }
    }

    fn class_bytes(&self, class: u8) -> u64 {
        match self {
            Egress::Host(h) => h.class_bytes(class),
            Egress::Switch(s) => s.class_bytes(class),
        }
    }
}

struct Port {
    egress: Egress,
    link: Link,
    busy: bool,
    tracker: Option<LinkTracker>,
}

enum Sender {
    Tcp(TcpSender),
    NearOpt(NearOptSender),
}

impl Sender {
    fn deadline(&self) -> Option<SimTime> {
        match self {
            Sender::Tcp(s) => s.rto_deadline(),
            Sender::NearOpt(s) => s.deadline(),
        }
    }

    fn is_complete(&self) -> bool {
        match self {
            Sender::Tcp(s) => s.is_complete(),
            Sender::NearOpt(s) => s.is_complete(),
        }
    }

    fn counts(&self) -> (u64, u64) {
        match self {
            Sender::Tcp(s) => (s.stats().packets_sent, s.stats().retransmissions),
            Sender::NearOpt(s) => (s.stats().packets_sent, s.stats().retransmissions),
        }
    }
}

struct ActiveFlow {
    sender: Sender,
    receiver: TcpReceiver,
    sack: bool,
    channel: Option<u32>,
    timer: Option<(SimTime, Ticket)>,
    pace_at: Option<SimTime>,
    blocked: bool,
    spurious: u64,
}

struct Channel {
    probe: ProbeChannel,
    flows: Vec<u32>,
    running: bool,
}

struct World<'a> {
    cfg: &'a ScenarioConfig,
    trace: &'a [FlowSpec],
    index: HashMap<FlowId, u32>,
    next_flow: usize,
    q: EventQueue<Event>,
    n: usize,
    ports: Vec<Port>,
    flows: Vec<Option<Box<ActiveFlow>>>,
    records: Vec<FlowRecord>,
    referee: LossLedger,
    oracle: LossLedger,
    channels: Vec<Channel>,
    channel_of: HashMap<(NodeId, NodeId), u32>,
    nearopt_active: Vec<u32>,
    round: SimTime,
    util_bin: SimTime,
    util: Vec<Vec<u64>>,
    counters: RunCounters,
}

/// Runs one scenario over a pre-generated trace.
pub fn simulate(cfg: &ScenarioConfig, trace: &[FlowSpec], seed: u64) -> Result<RunSummary, SimError> {
    cfg.validate()?;
    check_trace(cfg, trace)?;
    let mut w = World::new(cfg, trace)?;
    let end = cfg.end_time();
    if !trace.is_empty() {
        w.q.schedule(trace[0].arrival, Event::FlowStart);
    }
    if w.round > SimTime::ZERO {
        w.q.schedule(w.round, Event::Roll);
    }
    while let Some(ev) = w.q.pop_until(end) {
        w.handle(ev);
    }
    Ok(w.finish(seed, end))
}

fn check_trace(cfg: &ScenarioConfig, trace: &[FlowSpec]) -> Result<(), SimError> {
    let nodes = cfg.topology.nodes;
    let mut seen = std::collections::HashSet::new();
    for (i, f) in trace.iter().enumerate() {
        let bad = |why: String| Err(SimError::Trace(format!("flow {}: {why}", f.id.0)));
        if f.src.0 >= nodes || f.dst.0 >= nodes {
            return bad(format!("endpoint outside {nodes} nodes"));
        }
        if f.src == f.dst {
            return bad("source equals destination".into());
        }
        if usize::from(f.class) >= cfg.classes() {
            return bad(format!("class {} has no transport", f.class));
        }
        if f.size == 0 {
            return bad("empty flow".into());
        }
        if i > 0 && f.arrival < trace[i - 1].arrival {
            return bad("trace not sorted by arrival".into());
        }
        if !seen.insert(f.id) {
            return bad("duplicate id".into());
        }
    }
    Ok(())
}

impl<'a> World<'a> {
    fn new(cfg: &'a ScenarioConfig, trace: &'a [FlowSpec]) -> Result<Self, SimError> {
        let n = usize::from(cfg.topology.nodes);
        let classes = cfg.classes();
        let rate = cfg.topology.link_rate_bps();
        let prop = cfg.topology.propagation_delay();
        let nearopt = cfg.uses(Protocol::NearOpt);
        let round = if nearopt {
            let explicit =
                cfg.transports.iter().filter(|t| t.protocol == Protocol::NearOpt).find_map(|t| t.near_opt.round_us);
            match explicit {
                Some(us) => SimTime::from_micros(us),
                None if prop > SimTime::ZERO => prop,
                None => SimTime::from_micros(1),
            }
        } else {
            SimTime::ZERO
        };
        let host_part = cfg.fabric.host_partition();
        let switch_part = cfg.fabric.switch_partition();
        let mut ports = Vec::with_capacity(2 * n);
        for i in 0..2 * n {
            let egress = if i < n {
                Egress::Host(HostEgress::new(&host_part, cfg.fabric.host_policy(), cfg.fabric.driver_queue_packets)?)
            } else {
                Egress::Switch(PortQueueSet::new(&switch_part, cfg.fabric.switch_policy(), cfg.fabric.ecn_threshold)?)
            };
            ports.push(Port {
                egress,
                link: Link::new(rate, prop),
                busy: false,
                tracker: nearopt.then(|| LinkTracker::new(rate, round, classes)),
            });
        }
        let index = trace.iter().enumerate().map(|(i, f)| (f.id, i as u32)).collect();
        Ok(World {
            cfg,
            trace,
            index,
            next_flow: 0,
            q: EventQueue::new(),
            n,
            ports,
            flows: (0..trace.len()).map(|_| None).collect(),
            records: Vec::new(),
            referee: LossLedger::new(),
            oracle: LossLedger::new(),
            channels: Vec::new(),
            channel_of: HashMap::new(),
            nearopt_active: Vec::new(),
            round,
            util_bin: SimTime::from_micros(cfg.output.util_bin_us),
            util: vec![Vec::new(); n],
            counters: RunCounters { drops_by_class: vec![0; classes], ..Default::default() },
        })
    }

    fn now(&self) -> SimTime {
        self.q.now()
    }

    fn handle(&mut self, ev: Event) {
        match ev {
            Event::FlowStart => self.start_flows(),
            Event::TxDone(p) => {
                self.ports[p as usize].busy = false;
                self.try_start(p as usize);
            }
            Event::Deliver { port, pkt } => self.deliver(port as usize, pkt),
            Event::Rto(i) => self.on_rto(i),
            Event::Pace(i) => {
                let due = self.flows[i as usize].as_ref().is_some_and(|f| f.pace_at == Some(self.now()));
                if due {
                    self.with_flow(i, |w, f| {
                        f.pace_at = None;
                        w.pump(i, f);
                    });
                }
            }
            Event::Probe(c) => self.on_probe_tick(c),
            Event::Roll => self.roll(),
        }
    }

    /// Runs `body` with the flow taken out of its slot so `self` stays borrowable.
    fn with_flow(&mut self, i: u32, body: impl FnOnce(&mut Self, &mut ActiveFlow)) {
        let Some(mut f) = self.flows[i as usize].take() else {
            return;
        };
        body(self, &mut f);
        if f.sender.is_complete() {
            self.complete(i, f);
        } else {
            self.sync_timer(i, &mut f);
            self.flows[i as usize] = Some(f);
        }
    }

    fn start_flows(&mut self) {
        let now = self.now();
        while self.next_flow < self.trace.len() && self.trace[self.next_flow].arrival <= now {
            let i = self.next_flow as u32;
            self.next_flow += 1;
            self.start_flow(i);
        }
        if let Some(next) = self.trace.get(self.next_flow) {
            self.q.schedule(next.arrival, Event::FlowStart);
        }
    }

    fn start_flow(&mut self, i: u32) {
        let spec = &self.trace[i as usize];
        let tr = &self.cfg.transports[usize::from(spec.class)];
        let now = self.now();
        let mut channel = None;
        let (sender, sack) = match tr.protocol {
            Protocol::Tcp | Protocol::TcpPlus => {
                (Sender::Tcp(TcpSender::new(spec.size, &tr.tcp, Controller::from_tcp(&tr.tcp))), tr.tcp.sack_enabled)
            }
            Protocol::Ledbat => {
                (Sender::Tcp(TcpSender::new(spec.size, &tr.tcp, Controller::ledbat(&tr.ledbat))), tr.tcp.sack_enabled)
            }
            Protocol::TcpLp => {
                (Sender::Tcp(TcpSender::new(spec.size, &tr.tcp, Controller::tcp_lp(&tr.tcp_lp))), tr.tcp.sack_enabled)
            }
            Protocol::NearOpt => {
                let mut s = NearOptSender::new(
                    spec.id,
                    spec.size,
                    SimTime::from_micros(tr.near_opt.timeout_us),
                    tr.near_opt.inflight_cap,
                );
                let (a, b) = self.path(spec);
                for p in [a, b] {
                    self.ports[p].tracker.as_mut().expect("trackers exist with near-opt").add_flow(spec.class);
                }
                s.set_rate(self.path_rate(spec));
                self.nearopt_active.push(i);
                (Sender::NearOpt(s), true)
            }
        };
        let mut sender = sender;
        if tr.protocol == Protocol::TcpPlus {
            let c = self.channel_for(spec.src, spec.dst, tr.cqcn.probe_interval_us, tr.cqcn.probe_bytes);
            let ch = &mut self.channels[c as usize];
            ch.flows.push(i);
            if ch.probe.is_paused() {
                if let Sender::Tcp(s) = &mut sender {
                    s.pause(now);
                }
            }
            if !ch.running {
                ch.running = true;
                self.q.schedule(now, Event::Probe(c));
            }
            channel = Some(c);
        }
        self.flows[i as usize] = Some(Box::new(ActiveFlow {
            sender,
            receiver: TcpReceiver::new(),
            sack,
            channel,
            timer: None,
            pace_at: None,
            blocked: false,
            spurious: 0,
        }));
        self.with_flow(i, |w, f| w.pump(i, f));
    }

    fn channel_for(&mut self, src: NodeId, dst: NodeId, interval_us: u64, bytes: u32) -> u32 {
        if let Some(&c) = self.channel_of.get(&(src, dst)) {
            return c;
        }
        let c = self.channels.len() as u32;
        self.channels.push(Channel {
            probe: ProbeChannel::new(src, dst, SimTime::from_micros(interval_us), bytes),
            flows: Vec::new(),
            running: false,
        });
        self.channel_of.insert((src, dst), c);
        c
    }

    fn path(&self, spec: &FlowSpec) -> (usize, usize) {
        (spec.src.index(), self.n + spec.dst.index())
    }

    fn path_rate(&self, spec: &FlowSpec) -> f64 {
        let (a, b) = self.path(spec);
        path_rate(
            [a, b].into_iter().map(|p| self.ports[p].tracker.as_ref().expect("trackers exist with near-opt")),
            spec.class,
        )
    }

    /// Hands every segment the sender allows right now to the host.
    fn pump(&mut self, i: u32, f: &mut ActiveFlow) {
        let now = self.now();
        let mut out: Vec<(SeqRange, bool)> = Vec::new();
        match &mut f.sender {
            Sender::Tcp(s) => {
                while let Some(seg) = s.next_segment(now) {
                    out.push((seg.seq, seg.retransmission));
                }
            }
            Sender::NearOpt(s) => {
                f.blocked = false;
                loop {
                    match s.poll(now) {
                        PaceDecision::Send { seq, retransmission } => out.push((seq, retransmission)),
                        PaceDecision::WaitUntil(t) => {
                            if f.pace_at != Some(t) {
                                f.pace_at = Some(t);
                                self.q.schedule(t, Event::Pace(i));
                            }
                            break;
                        }
                        PaceDecision::Blocked => {
                            f.blocked = true;
                            break;
                        }
                    }
                }
            }
        }
        for (seq, retx) in out {
            self.send_data(i, f, seq, retx);
        }
    }

    fn send_data(&mut self, i: u32, f: &mut ActiveFlow, seq: SeqRange, retransmission: bool) {
        let spec = &self.trace[i as usize];
        let mut pkt = Packet::data(spec.id, spec.src, spec.dst, spec.class, seq);
        pkt.ecn_capable = self.cfg.fabric.ecn_data;
        pkt.sent_at = self.now();
        if retransmission {
            if !self.referee.take(spec.id, seq) {
                f.spurious += 1;
            }
            if f.channel.is_some_and(|c| self.channels[c as usize].probe.is_paused()) {
                self.counters.retransmissions_while_paused += 1;
            }
        }
        self.host_send(spec.src.index(), pkt);
    }

    fn host_send(&mut self, host: usize, pkt: Packet) {
        let now = self.now();
        if let Admission::Dropped(p) = self.ports[host].egress.enqueue(pkt, now) {
            self.counters.host_drops += 1;
            self.on_drop(p);
        }
        self.try_start(host);
    }

    fn on_drop(&mut self, pkt: Packet) {
        let PacketKind::Data { seq } = pkt.kind else {
            return;
        };
        self.referee.record_drop(pkt.flow, seq);
        let protocol = self.cfg.transports[usize::from(pkt.class)].protocol;
        if protocol == Protocol::NearOpt {
            self.oracle.record_drop(pkt.flow, seq);
        }
        if protocol == Protocol::TcpPlus {
            let paused = self
                .index
                .get(&pkt.flow)
                .and_then(|&i| self.flows[i as usize].as_ref())
                .and_then(|f| f.channel)
                .is_some_and(|c| self.channels[c as usize].probe.is_paused());
            if paused {
                self.counters.drops_while_paused += 1;
            }
        }
    }

    fn try_start(&mut self, p: usize) {
        let now = self.now();
        let port = &mut self.ports[p];
        if port.busy {
            return;
        }
        let Some(mut pkt) = port.egress.dequeue() else {
            return;
        };
        port.busy = true;
        let ser = port.link.serialization_delay(pkt.size);
        if let Some(t) = port.tracker.as_mut() {
            t.record_tx(pkt.class, pkt.size);
        }
        let arrive = now + ser + port.link.propagation_delay;
        if p >= self.n {
            let bin = (now.as_nanos() / self.util_bin.as_nanos()) as usize;
            let u = &mut self.util[p - self.n];
            if u.len() <= bin {
                u.resize(bin + 1, 0);
            }
            u[bin] += u64::from(pkt.size);
        }
        pkt.enqueued_at = SimTime::ZERO;
        self.q.schedule(now + ser, Event::TxDone(p as u32));
        self.q.schedule(arrive, Event::Deliver { port: p as u32, pkt });
    }

    fn deliver(&mut self, port: usize, pkt: Packet) {
        if port < self.n {
            let out = self.n + pkt.dst.index();
            let now = self.now();
            if let Admission::Dropped(p) = self.ports[out].egress.enqueue(pkt, now) {
                self.counters.drops_by_class[usize::from(p.class)] += 1;
                self.on_drop(p);
            }
            self.try_start(out);
        } else {
            self.host_receive(NodeId((port - self.n) as u16), pkt);
        }
    }

    fn host_receive(&mut self, host: NodeId, pkt: Packet) {
        let now = self.now();
        match pkt.kind {
            PacketKind::Data { seq } => {
                let Some(&i) = self.index.get(&pkt.flow) else {
                    return;
                };
                let Some(f) = self.flows[i as usize].as_mut() else {
                    return;
                };
                let header = f.receiver.on_data(seq, pkt.sent_at, now, f.sack);
                let mut ack = Packet::ack(pkt.flow, host, pkt.src, pkt.class, header);
                ack.sent_at = now;
                self.host_send(host.index(), ack);
            }
            PacketKind::Ack(header) => {
                let Some(&i) = self.index.get(&pkt.flow) else {
                    return;
                };
                self.with_flow(i, |w, f| {
                    match &mut f.sender {
                        Sender::Tcp(s) => s.on_ack(&header, now),
                        Sender::NearOpt(s) => s.on_ack(&header, now),
                    }
                    if !f.sender.is_complete() {
                        w.pump(i, f);
                    }
                });
            }
            PacketKind::Probe { seq } => {
                let mut echo = Packet::probe_echo(host, pkt.src, seq, pkt.ecn_marked, pkt.size);
                echo.sent_at = now;
                self.host_send(host.index(), echo);
            }
            PacketKind::ProbeEcho { seq, marked } => {
                let Some(&c) = self.channel_of.get(&(host, pkt.src)) else {
                    return;
                };
                let Some(paused) = self.channels[c as usize].probe.feedback(seq, marked) else {
                    return;
                };
                if paused {
                    self.counters.pauses += 1;
                }
                let flows = self.channels[c as usize].flows.clone();
                for i in flows {
                    self.with_flow(i, |w, f| {
                        if let Sender::Tcp(s) = &mut f.sender {
                            if paused {
                                s.pause(now);
                            } else {
                                s.resume(now);
                            }
                        }
                        if !paused && !f.sender.is_complete() {
                            w.pump(i, f);
                        }
                    });
                }
            }
        }
    }

    fn on_probe_tick(&mut self, c: u32) {
        let ch = &mut self.channels[c as usize];
        if ch.flows.is_empty() {
            ch.running = false;
            return;
        }
        let mut pkt = ch.probe.tick();
        let interval = ch.probe.probe_interval;
        let src = ch.probe.src.index();
        self.counters.probes_sent += 1;
        pkt.sent_at = self.now();
        self.host_send(src, pkt);
        self.q.schedule_in(interval, Event::Probe(c));
    }

    fn on_rto(&mut self, i: u32) {
        let now = self.now();
        self.with_flow(i, |w, f| {
            f.timer = None;
            let fired = match &mut f.sender {
                Sender::Tcp(s) => s.on_timeout(now),
                Sender::NearOpt(s) => {
                    let stalls = s.stats().stalls;
                    let fired = s.on_timeout(now, &mut w.oracle);
                    w.counters.nearopt_stalls += s.stats().stalls - stalls;
                    fired
                }
            };
            if fired || f.blocked {
                w.pump(i, f);
            }
        });
    }

    /// Keeps at most one pending timer event per flow, never later than the sender's deadline.
    fn sync_timer(&mut self, i: u32, f: &mut ActiveFlow) {
        match (f.timer, f.sender.deadline()) {
            (Some((at, t)), Some(d)) if d < at => {
                self.q.cancel(t);
                f.timer = Some((d, self.q.schedule(d, Event::Rto(i))));
            }
            (None, Some(d)) => {
                let d = d.max(self.now());
                f.timer = Some((d, self.q.schedule(d, Event::Rto(i))));
            }
            (Some((_, t)), None) => {
                self.q.cancel(t);
                f.timer = None;
            }
            _ => {}
        }
    }

    fn roll(&mut self) {
        for port in &mut self.ports {
            let Port { egress, tracker, .. } = port;
            if let Some(t) = tracker.as_mut() {
                t.roll(|c| egress.class_bytes(c));
            }
        }
        for i in self.nearopt_active.clone() {
            let rate = self.path_rate(&self.trace[i as usize]);
            let Some(f) = self.flows[i as usize].as_mut() else {
                continue;
            };
            let moved = match &mut f.sender {
                Sender::NearOpt(s) => {
                    let before = s.rate_bps();
                    s.set_rate(rate);
                    before != rate
                }
                Sender::Tcp(_) => false,
            };
            if f.blocked || moved {
                self.with_flow(i, |w, f| w.pump(i, f));
            }
        }
        self.q.schedule_in(self.round, Event::Roll);
    }

    fn complete(&mut self, i: u32, f: Box<ActiveFlow>) {
        if let Some((_, t)) = f.timer {
            self.q.cancel(t);
        }
        let spec = &self.trace[i as usize];
        self.release(i, &f);
        let (sent, retx) = f.sender.counts();
        self.records.push(record_completion(spec, self.now(), sent, retx, f.spurious));
    }

    /// Drops the flow from trackers and probe channels and folds its counters in.
    fn release(&mut self, i: u32, f: &ActiveFlow) {
        let spec = &self.trace[i as usize];
        if let Sender::NearOpt(_) = f.sender {
            let (a, b) = self.path(spec);
            for p in [a, b] {
                if let Some(t) = self.ports[p].tracker.as_mut() {
                    t.remove_flow(spec.class);
                }
            }
            if let Some(k) = self.nearopt_active.iter().position(|&x| x == i) {
                self.nearopt_active.swap_remove(k);
            }
        }
        if let Some(c) = f.channel {
            self.channels[c as usize].flows.retain(|&x| x != i);
        }
        if let Sender::Tcp(s) = &f.sender {
            self.counters.protocol_faults += s.stats().protocol_faults;
            self.counters.timeouts += s.stats().timeouts;
        }
    }

    fn finish(mut self, seed: u64, end: SimTime) -> RunSummary {
        let mut censored = Vec::new();
        for i in 0..self.flows.len() {
            if let Some(f) = self.flows[i].take() {
                self.release(i as u32, &f);
                let spec = &self.trace[i];
                let (sent, retx) = f.sender.counts();
                censored.push(CensoredFlow {
                    flow_id: spec.id,
                    class: spec.class,
                    size: spec.size,
                    packets_sent: sent,
                    retransmissions: retx,
                    spurious: f.spurious,
                });
            }
        }
        self.records.sort_by_key(|r| r.flow_id);
        self.counters.events = self.q.events_processed();

        let bins = (end.as_nanos().div_ceil(self.util_bin.as_nanos())) as usize;
        let busiest =
            (0..self.n).max_by_key(|&p| (self.util[p].iter().sum::<u64>(), std::cmp::Reverse(p))).unwrap_or(0);
        let cap = self.cfg.topology.link_rate_bps() as f64 * self.util_bin.as_secs_f64() / 8.0;
        let mut fractions: Vec<f64> = self.util[busiest].iter().map(|&b| b as f64 / cap).collect();
        fractions.resize(bins, 0.0);

        RunSummary {
            scenario: self.cfg.name.clone(),
            transport: self.cfg.lp_label().to_string(),
            seed,
            trace_fingerprint: trace_fingerprint(self.trace),
            records: self.records,
            censored,
            utilization: Utilization { port: self.n + busiest, bin: self.util_bin, fractions },
            counters: self.counters,
            end_time: end,
        }
    }
}
