//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::{Arc, Mutex};

use lpsim::config::{Protocol, ScenarioConfig};
use lpsim::fabric::{BufferPartition, Drr, FlowId, NodeId, Packet, PortQueueSet, SchedulerPolicy, SeqRange};
use lpsim::metrics::{normalize_paired, percentile, PairedResult, RunSummary};
use lpsim::nearopt::fair_rate;
use lpsim::network::simulate;
use lpsim::rng::RngStream;
use lpsim::runner;
use lpsim::time::SimTime;
use lpsim::transport::{
    backed_off, compute_rto, Algorithm, Controller, CubicState, LedbatState, RtoPolicy, TcpConfig, TcpReceiver,
    TcpSender,
};
use lpsim::workloads::{FlowSpec, SizeClass};

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;

const LP: u8 = 1;
const HP: u8 = 0;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn scenario(name: &str) -> ScenarioConfig {
    let path = configs_dir().join(format!("{name}.toml"));
    ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn set(cfg: &ScenarioConfig, key: &str, value: impl Into<toml::Value>) -> ScenarioConfig {
    cfg.with_override(key, &value.into()).unwrap_or_else(|e| panic!("{key}: {e}"))
}

fn pct(v: &[f64], p: f64) -> f64 {
    percentile(v, p).unwrap_or(f64::NAN)
}

/// Memoized simulation results keyed by normalized config and seed.
struct Lab {
    runs: Mutex<HashMap<(String, u64), Arc<RunSummary>>>,
}

impl Lab {
    fn new() -> Self {
        Lab { runs: Mutex::new(HashMap::new()) }
    }

    fn key(cfg: &ScenarioConfig) -> String {
        let mut c = cfg.clone();
        for t in c.transports.iter_mut().filter(|t| t.protocol == Protocol::NearOpt) {
            let near_opt = t.near_opt.clone();
            *t = Default::default();
            t.protocol = Protocol::NearOpt;
            t.near_opt = near_opt;
        }
        c.name.clear();
        c.to_toml()
    }

    fn runs(&self, cfg: &ScenarioConfig) -> Result<Vec<Arc<RunSummary>>, runner::RunError> {
        let key = Self::key(cfg);
        let dir = configs_dir();
        let results = lpsim::par::map(&cfg.seeds, |&seed| {
            if let Some(r) = self.runs.lock().unwrap().get(&(key.clone(), seed)) {
                return Ok(r.clone());
            }
            let r = Arc::new(runner::simulate_seed(cfg, seed, Some(&dir))?);
            self.runs.lock().unwrap().insert((key.clone(), seed), r.clone());
            Ok(r)
        });
        results.into_iter().collect()
    }

    fn paired(&self, cfg: &ScenarioConfig) -> Result<Vec<PairedResult>, Box<dyn std::error::Error>> {
        let cand = self.runs(cfg)?;
        let base = self.runs(&runner::baseline_config(cfg))?;
        let mut out = Vec::new();
        for (c, b) in cand.iter().zip(&base) {
            out.push(normalize_paired(c, b)?);
        }
        Ok(out)
    }

    /// Pooled low-priority normalized FCTs over every seed.
    fn ratios(
        &self,
        cfg: &ScenarioConfig,
        size_class: Option<SizeClass>,
    ) -> Result<Vec<f64>, Box<dyn std::error::Error>> {
        Ok(self.paired(cfg)?.iter().flat_map(|p| p.ratios(LP, size_class)).collect())
    }

    /// Pooled FCTs in seconds over every seed.
    fn fcts(
        &self,
        cfg: &ScenarioConfig,
        class: u8,
        size_class: Option<SizeClass>,
    ) -> Result<Vec<f64>, runner::RunError> {
        Ok(self.runs(cfg)?.iter().flat_map(|r| r.fcts(class, size_class)).collect())
    }
}

fn determinism(_: &Lab) -> Outcome {
    let names = ["onoff", "das", "hybrid", "sjf-websearch", "sjf-datamining"];
    let mut mismatched = Vec::new();
    let mut files = 0;
    for name in names {
        let cfg = set(&scenario(name), "duration_us", 30_000);
        let seed = cfg.seeds[0];
        let dirs = [tempfile::tempdir()?, tempfile::tempdir()?];
        let mut outputs = Vec::new();
        for d in &dirs {
            let mut written = runner::run_paired(&cfg, seed, d.path(), Some(&configs_dir()))?;
            written.sort();
            let mut contents = Vec::new();
            for f in written {
                contents.push((f.file_name().unwrap().to_owned(), std::fs::read(&f)?));
            }
            outputs.push(contents);
        }
        files += outputs[0].len();
        if outputs[0] != outputs[1] {
            mismatched.push(name);
        }
    }
    Ok((mismatched.is_empty(), format!("{files} files over {} scenarios, mismatched: {mismatched:?}", names.len())))
}

fn data(class: u8, seq: u64, len: u64) -> Packet {
    Packet::data(FlowId(u32::from(class)), NodeId(1), NodeId(2), class, SeqRange::new(seq, seq + len))
}

fn spq_ordering(_: &Lab) -> Outcome {
    let part = BufferPartition::new(64 * 1460, vec![32 * 1460, 32 * 1460])?;
    let mut q = PortQueueSet::new(&part, SchedulerPolicy::StrictPriority, 1.0)?;
    let mut rng = RngStream::new(7, "acceptance.spq");
    let mut violations = 0u64;
    let (mut enq, mut deq) = (0u64, 0u64);
    let mut seq = 0;
    for _ in 0..1_000_000 {
        if rng.uniform() < 0.55 {
            let class = u8::from(rng.uniform() < 0.5);
            let len = 64 + rng.index(1397) as u64;
            q.enqueue(data(class, seq, len), SimTime::ZERO)?;
            seq += len;
            enq += 1;
        } else {
            let hp_waiting = q.class_packets(HP) > 0;
            let nonempty = !q.is_empty();
            match q.dequeue() {
                Some(p) if p.class == LP && hp_waiting => violations += 1,
                None if nonempty => violations += 1,
                Some(_) => deq += 1,
                None => {}
            }
        }
    }
    Ok((violations == 0, format!("{violations} violations, {enq} enqueue and {deq} dequeue events")))
}

fn wfq_share(_: &Lab) -> Outcome {
    let part = BufferPartition::new(128 * 1460, vec![64 * 1460, 64 * 1460])?;
    let mut q = PortQueueSet::new(&part, SchedulerPolicy::WeightedFair(Drr::with_mtu_quantum(vec![99, 1])), 1.0)?;
    let mut seq = [0u64; 2];
    let mut bytes = [0u64; 2];
    let dequeues = 100_000;
    for _ in 0..dequeues {
        for class in [HP, LP] {
            while q.class_packets(class) < 8 {
                let c = usize::from(class);
                q.enqueue(data(class, seq[c], 1460), SimTime::ZERO)?;
                seq[c] += 1460;
            }
        }
        let p = q.dequeue().ok_or("saturated queue returned nothing")?;
        bytes[usize::from(p.class)] += u64::from(p.size);
    }
    let share = bytes[1] as f64 / (bytes[0] + bytes[1]) as f64;
    let pass = (share - 0.01).abs() <= 0.003;
    Ok((pass, format!("low-priority byte share {:.4}% over {dequeues} dequeues (want 1% +/- 0.3%)", share * 100.0)))
}

const BACKLOG: &str = r#"
name = "backlog"
duration_us = 1000
drain_us = 200000
seeds = [1]

[topology]
nodes = 6
link_rate_mbps = 10000
base_rtt_us = 100

[[transports]]
protocol = "tcp"

[[transports]]
protocol = "near-opt"

[workload]
kind = "das"
size = { uniform = 100000 }
load = 0.1
client = 0
"#;

/// Backlogged low-priority oracle flows converging on node 0 with HP idle.
fn backlog_run(flows: u16, size: u64) -> Result<RunSummary, Box<dyn std::error::Error>> {
    let cfg = ScenarioConfig::parse(BACKLOG)?;
    let mut rng = RngStream::new(u64::from(flows), "acceptance.backlog");
    let mut arrivals: Vec<u64> = (0..flows).map(|_| (rng.uniform() * 50_000.0) as u64).collect();
    arrivals.sort_unstable();
    let trace: Vec<FlowSpec> = (0..flows)
        .map(|i| FlowSpec {
            id: FlowId(u32::from(i)),
            src: NodeId(i + 1),
            dst: NodeId(0),
            size,
            class: LP,
            arrival: SimTime::from_nanos(arrivals[usize::from(i)]),
            twin_of: None,
        })
        .collect();
    let run = simulate(&cfg, &trace, 1)?;
    if run.records.len() != usize::from(flows) {
        return Err(format!("only {} of {flows} backlogged flows finished", run.records.len()).into());
    }
    Ok(run)
}

/// Lowest bottleneck utilization over any 100-round window while every flow is active.
fn backlog_utilization(run: &RunSummary) -> f64 {
    let round = SimTime::from_micros(25).as_nanos();
    let bin = run.utilization.bin.as_nanos();
    let last_start = run.records.iter().map(|r| r.arrival).max().unwrap();
    let first_done = run.records.iter().map(|r| r.completion).min().unwrap();
    let from = last_start.as_nanos().div_ceil(bin) as usize + 1;
    let to = (first_done.as_nanos() / bin) as usize;
    let bins = (100 * round).div_ceil(bin) as usize;
    run.utilization.min_window_mean(bins, from, to).unwrap_or(0.0)
}

fn nearopt_contracts(lab: &Lab) -> Outcome {
    let cfg = runner::baseline_config(&scenario("onoff"));
    let (mut retx, mut spurious, mut drops) = (0, 0, 0);
    for r in lab.runs(&cfg)? {
        let (t, s) = r.total_retransmissions(LP);
        retx += t;
        spurious += s;
        drops += r.counters.drops_by_class.get(usize::from(LP)).copied().unwrap_or(0);
    }

    let mut util = Vec::new();
    let mut spread = 0.0;
    for flows in [1u16, 2, 4] {
        let run = backlog_run(flows, 10_000_000)?;
        util.push((flows, backlog_utilization(&run)));
        let rates: Vec<f64> = run.records.iter().map(|r| r.size as f64 / r.fct().as_secs_f64()).collect();
        let lo = rates.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = rates.iter().copied().fold(0.0, f64::max);
        spread = f64::max(spread, hi / lo - 1.0);
    }
    let util_ok = util.iter().all(|&(_, u)| u >= 0.95);
    let shown: Vec<String> = util.iter().map(|(n, u)| format!("{n} flows {:.1}%", u * 100.0)).collect();
    Ok((
        spurious == 0 && util_ok && spread <= 0.05,
        format!(
            "on-off spurious {spurious} of {retx} retransmissions ({drops} drops); \
             min 100-round utilization {} (want >= 95%); rate spread {:.2}% (want <= 5%)",
            shown.join(", "),
            spread * 100.0
        ),
    ))
}

fn rate_equation(_: &Lab) -> Outcome {
    const G: f64 = 1e9;
    let round = SimTime::from_micros(25);
    let bytes = |gbps: f64| (gbps * G * round.as_secs_f64() / 8.0).round() as u64;
    let idle = fair_rate(10.0 * G, round, &[0, 0], &[0, 0], 1, 1);
    let shared = fair_rate(10.0 * G, round, &[bytes(4.0), 0], &[0, 0], 1, 2);
    let over = fair_rate(10.0 * G, round, &[bytes(9.0), 0], &[bytes(1.0), bytes(1.0)], 1, 4);
    let pass = idle == 10.0 * G && shared == 3.0 * G && over == 0.0;
    Ok((
        pass,
        format!("idle {} Gbps, 4G HP over 2 flows {} Gbps, oversubscribed {} Gbps", idle / G, shared / G, over / G),
    ))
}

/// Retransmission rates of low-priority long flows, censored ones included.
fn long_flow_retx(runs: &[Arc<RunSummary>]) -> Vec<f64> {
    let mut v = Vec::new();
    for r in runs {
        v.extend(r.class_records(LP).filter(|f| f.size_class == SizeClass::Long).map(|f| f.retransmission_rate()));
        v.extend(
            r.censored
                .iter()
                .filter(|c| c.class == LP && SizeClass::of(c.size) == SizeClass::Long && c.packets_sent > 0)
                .map(|c| lpsim::metrics::retransmission_rate(c.packets_sent, c.retransmissions)),
        );
    }
    v
}

fn retransmission_ordering(lab: &Lab) -> Outcome {
    let spq = scenario("onoff");
    let fifo = set(&spq, "fabric.scheduler", "fifo");
    let spq_p80 = pct(&long_flow_retx(&lab.runs(&spq)?), 80.0);
    let fifo_p80 = pct(&long_flow_retx(&lab.runs(&fifo)?), 80.0);
    let pass = spq_p80 > fifo_p80 && spq_p80 >= 0.04 && fifo_p80 <= 0.01;
    Ok((
        pass,
        format!(
            "long-flow retransmission rate p80: priority {:.2}% (want >= 4%), single queue {:.2}% (want <= 1%)",
            spq_p80 * 100.0,
            fifo_p80 * 100.0
        ),
    ))
}

fn use_cases(lab: &Lab) -> Outcome {
    let das = pct(&lab.ratios(&scenario("das"), None)?, 99.0);
    let ws = lab.ratios(&scenario("sjf-websearch"), None)?;
    let dm = lab.ratios(&scenario("sjf-datamining"), None)?;
    let (ws99, dm99) = (pct(&ws, 99.0), pct(&dm, 99.0));
    let (ws999, dm999) = (pct(&ws, 99.9), pct(&dm, 99.9));
    let onoff = scenario("onoff");
    let medium = pct(&lab.ratios(&onoff, Some(SizeClass::Medium))?, 99.0);
    let mut updates = Vec::new();
    for size in [500_000i64, 1_000_000, 1_500_000] {
        updates.push(pct(&lab.ratios(&set(&onoff, "workload.update_size", size), None)?, 99.0));
    }
    let checks = [
        ("das<=2.5", das <= 2.5),
        ("websearch<=2.5", ws99 <= 2.5),
        ("datamining<=3.5", dm99 <= 3.5),
        ("dm>=ws@p99.9", dm999 >= ws999),
        ("onoff-medium>=3", medium >= 3.0),
        ("updates-monotone", updates[0] < updates[1] && updates[1] < updates[2]),
        ("12MB>=6", updates[2] >= 6.0),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    Ok((
        failed.is_empty(),
        format!(
            "p99 das {das:.2}, websearch {ws99:.2}, datamining {dm99:.2}; p99.9 ws {ws999:.2} dm {dm999:.2}; \
             on-off medium {medium:.2}; updates 4/8/12MB {:.2}/{:.2}/{:.2}; failed {failed:?}",
            updates[0], updates[1], updates[2]
        ),
    ))
}

fn buffer_sensitivity(lab: &Lab) -> Outcome {
    let base = set(&scenario("onoff"), "fabric.port_buffer", 327_680);
    let mut p99 = Vec::new();
    for kb in [24i64, 64, 96, 192] {
        p99.push(pct(&lab.ratios(&set(&base, "fabric.class_buffers.1", kb * 1024), None)?, 99.0));
    }
    let decreasing = p99.windows(2).all(|w| w[0] > w[1]);
    let factor = p99[0] / p99[3];
    Ok((
        decreasing && factor >= 2.0,
        format!("p99 at 24/64/96/192KB {:.2}/{:.2}/{:.2}/{:.2}; 24KB vs 192KB {factor:.2}x (want >= 2x, strictly decreasing)", p99[0], p99[1], p99[2], p99[3]),
    ))
}

fn rto_u_shape(lab: &Lab) -> Outcome {
    let base = scenario("onoff");
    let mut p99 = Vec::new();
    for us in [500i64, 1000, 5000, 10_000] {
        let cfg = set(&base, "transports.1.tcp.rto_min_us", us);
        p99.push(pct(&lab.fcts(&cfg, LP, None)?, 99.0) * 1e3);
    }
    let edge = p99[0].min(p99[3]);
    let pass = p99[1] < edge || p99[2] < edge;
    Ok((pass, format!("p99 FCT ms at rto_min 0.5/1/5/10ms: {:.2}/{:.2}/{:.2}/{:.2}", p99[0], p99[1], p99[2], p99[3])))
}

fn variant_spread(lab: &Lab) -> Outcome {
    let base = scenario("onoff");
    let mut p99 = Vec::new();
    let mut labels = Vec::new();
    for alg in ["new-reno", "cubic"] {
        for sack in [false, true] {
            let cfg = set(&set(&base, "transports.1.tcp.algorithm", alg), "transports.1.tcp.sack_enabled", sack);
            p99.push(pct(&lab.ratios(&cfg, None)?, 99.0));
            labels.push(format!("{alg}{}", if sack { "+sack" } else { "" }));
        }
    }
    let lo = p99.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = p99.iter().copied().fold(0.0, f64::max);
    let spread = hi / lo - 1.0;
    let detail: Vec<String> = labels.iter().zip(&p99).map(|(l, v)| format!("{l} {v:.2}")).collect();
    Ok((spread <= 0.25, format!("p99 {}; spread {:.1}% (want <= 25%)", detail.join(", "), spread * 100.0)))
}

fn wan_transports(lab: &Lab) -> Outcome {
    let base = scenario("onoff");
    let tcp = pct(&lab.fcts(&base, LP, None)?, 99.0);
    let ledbat = pct(&lab.fcts(&set(&base, "transports.1.protocol", "ledbat"), LP, None)?, 99.0);
    let tcplp = pct(&lab.fcts(&set(&base, "transports.1.protocol", "tcp-lp"), LP, None)?, 99.0);
    let (a, b) = (ledbat / tcp, tcplp / tcp);
    Ok((a >= 1.5 && b >= 1.5, format!("p99 FCT vs TCP: LEDBAT {a:.2}x, TCP-LP {b:.2}x (want both >= 1.5x)")))
}

fn remedies(lab: &Lab) -> Outcome {
    let spq = set(&scenario("onoff"), "workload.update_size", 1_500_000);
    let wfq = set(&spq, "fabric.scheduler", "wfq");
    let plus = set(&spq, "transports.1.protocol", "tcp-plus");
    let small = |c: &ScenarioConfig| lab.fcts(c, LP, Some(SizeClass::Small)).map(|v| pct(&v, 99.9));
    let hp = |c: &ScenarioConfig| lab.fcts(c, HP, None).map(|v| pct(&v, 99.9));
    let medium = |c: &ScenarioConfig| lab.fcts(c, LP, Some(SizeClass::Medium)).map(|v| pct(&v, 99.0));
    let small_gain = small(&spq)? / small(&wfq)?;
    let hp_cost = hp(&wfq)? / hp(&spq)? - 1.0;
    let plus_gain = medium(&spq)? / medium(&plus)?;
    let paused_retx: u64 = lab.runs(&plus)?.iter().map(|r| r.counters.retransmissions_while_paused).sum();
    let pass = small_gain >= 2.0 && hp_cost <= 0.10 && plus_gain >= 2.0 && paused_retx == 0;
    Ok((
        pass,
        format!(
            "WFQ small p99.9 gain {small_gain:.2}x (want >= 2x), HP p99.9 change {:+.1}% (want <= 10%); \
             TCP+ medium p99 gain {plus_gain:.2}x (want >= 2x), retransmissions while paused {paused_retx}",
            hp_cost * 100.0
        ),
    ))
}

fn micro_suites(_: &Lab) -> Outcome {
    let us = SimTime::from_micros;
    let policy = RtoPolicy { rto_min: us(1000), max_rto: us(1_000_000), initial_rto: us(1000) };
    let rto = [
        compute_rto(us(100), us(25), &policy) == us(1000),
        compute_rto(us(4000), us(1000), &policy) == us(8000),
        backed_off(us(1000), 1, policy.max_rto) == us(2000),
        backed_off(us(1000), 2, policy.max_rto) == us(4000),
    ];

    let mss = 1460.0;
    let mut cubic = CubicState::new(0.4, 0.7);
    let w_max = 100.0 * mss;
    let ssthresh = cubic.on_loss(w_max);
    cubic.on_ack(ssthresh, mss, SimTime::from_millis(3), us(100), mss);
    let cubic_ok = cubic.window_at(cubic.k, mss) == w_max;

    let ledbat = LedbatState::new(us(3200), 1.0, 4);
    let cwnd = 37.0 * mss;
    let ledbat_ok = ledbat.update(cwnd, us(3200), mss, mss).to_bits() == cwnd.to_bits();

    let freeze_ok = freeze_thaw();

    let pass = rto.iter().all(|&b| b) && cubic_ok && ledbat_ok && freeze_ok;
    Ok((
        pass,
        format!("rto examples {rto:?}; cubic W(K)=w_max {cubic_ok}; ledbat equilibrium {ledbat_ok}; TCP+ freeze/thaw {freeze_ok}"),
    ))
}

fn freeze_thaw() -> bool {
    let mss = 1460;
    let cfg = TcpConfig { algorithm: Algorithm::Cubic, sack_enabled: true, ..TcpConfig::default() };
    let mut s = TcpSender::new(1000 * mss, &cfg, Controller::from_tcp(&cfg));
    let mut r = TcpReceiver::new();
    let rtt = SimTime::from_micros(100);
    let mut now = SimTime::ZERO;
    let drain = |s: &mut TcpSender, now| std::iter::from_fn(|| s.next_segment(now)).collect::<Vec<_>>();
    for _ in 0..6 {
        let segs = drain(&mut s, now);
        now += rtt;
        for g in segs {
            let a = r.on_data(g.seq, now - rtt, now, true);
            s.on_ack(&a, now);
        }
    }
    let in_flight = drain(&mut s, now);
    let before = s.snapshot();
    let deadline = s.rto_deadline();
    let mut idle = s.clone();

    s.pause(now);
    let arrive = now + rtt;
    for g in &in_flight {
        let a = r.on_data(g.seq, now, arrive, true);
        s.on_ack(&a, arrive);
    }
    let timer_fired = s.on_timeout(now + SimTime::from_millis(50));
    let held = s.snapshot() == before && s.next_segment(arrive).is_none();

    idle.pause(now);
    let later = now + SimTime::from_millis(5);
    idle.resume(later);
    let thawed = idle.snapshot() == before && idle.rto_deadline() == deadline.map(|d| d + SimTime::from_millis(5));
    !timer_fired && held && thawed && !in_flight.is_empty()
}

fn main() -> ExitCode {
    let criteria: [(&str, fn(&Lab) -> Outcome); 13] = [
        ("determinism", determinism),
        ("strict priority ordering", spq_ordering),
        ("weighted fair share", wfq_share),
        ("oracle contracts", nearopt_contracts),
        ("fair-rate equation", rate_equation),
        ("retransmission ordering", retransmission_ordering),
        ("use-case ordering", use_cases),
        ("buffer sensitivity", buffer_sensitivity),
        ("rto_min u-shape", rto_u_shape),
        ("tcp variant insensitivity", variant_spread),
        ("wan low-priority transports", wan_transports),
        ("remedies", remedies),
        ("transport micro-suites", micro_suites),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let lab = Lab::new();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = format!("C{:02}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| id.eq_ignore_ascii_case(f) || name.contains(f.as_str())) {
            continue;
        }
        let start = std::time::Instant::now();
        let (pass, detail) = match check(&lab) {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} {id} {name}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {failed} failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
