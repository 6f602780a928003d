//! Scenario configuration files.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fabric::{BufferPartition, Drr, SchedulerPolicy, MTU};
use crate::nearopt::NearOptConfig;
use crate::time::SimTime;
use crate::transport::{CqcnConfig, LedbatConfig, TcpConfig, TcpLpConfig};
use crate::workloads::{SizeSpec, Topology, WorkloadConfig};

pub const MAX_CLASSES: usize = 8;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error("override {key}: {reason}")]
    Override { key: String, reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfig {
    pub nodes: u16,
    pub link_rate_mbps: u64,
    /// Split evenly over the four link traversals of a host-to-host round trip.
    pub base_rtt_us: u64,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig { nodes: 40, link_rate_mbps: 10_000, base_rtt_us: 100 }
    }
}

impl TopologyConfig {
    pub fn link_rate_bps(&self) -> u64 {
        self.link_rate_mbps * 1_000_000
    }

    pub fn propagation_delay(&self) -> SimTime {
        SimTime::from_nanos(self.base_rtt_us * 1000 / 4)
    }

    pub fn topology(&self) -> Topology {
        Topology { nodes: self.nodes, link_rate_bps: self.link_rate_bps() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedulerKind {
    #[default]
    Spq,
    Wfq,
    /// One shared queue for all classes.
    Fifo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FabricConfig {
    pub scheduler: SchedulerKind,
    /// Host egress scheduler; the switch scheduler when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub host_scheduler: Option<SchedulerKind>,
    pub wfq_weights: Vec<u32>,
    pub port_buffer: u64,
    /// Per-class switch buffer, class 0 first.
    pub class_buffers: Vec<u64>,
    /// Fraction of a class queue's capacity at which ECN-capable packets are marked.
    pub ecn_threshold: f64,
    /// Whether data packets are ECN-capable (probes always are).
    pub ecn_data: bool,
    pub driver_queue_packets: usize,
    pub host_class_buffer: u64,
}

impl Default for FabricConfig {
    fn default() -> Self {
        FabricConfig {
            scheduler: SchedulerKind::Spq,
            host_scheduler: None,
            wfq_weights: vec![99, 1],
            port_buffer: 192 * 1024,
            class_buffers: vec![128 * 1024, 64 * 1024],
            ecn_threshold: 0.3,
            ecn_data: false,
            driver_queue_packets: 100,
            host_class_buffer: 4 << 20,
        }
    }
}

impl FabricConfig {
    fn policy(&self, kind: SchedulerKind) -> SchedulerPolicy {
        match kind {
            SchedulerKind::Spq => SchedulerPolicy::StrictPriority,
            SchedulerKind::Fifo => SchedulerPolicy::Fifo,
            SchedulerKind::Wfq => SchedulerPolicy::WeightedFair(Drr::new(self.wfq_weights.clone(), MTU)),
        }
    }

    pub fn switch_policy(&self) -> SchedulerPolicy {
        self.policy(self.scheduler)
    }

    pub fn host_policy(&self) -> SchedulerPolicy {
        self.policy(self.host_scheduler.unwrap_or(self.scheduler))
    }

    pub fn switch_partition(&self) -> BufferPartition {
        BufferPartition { port_total: self.port_buffer, per_class: self.class_buffers.clone() }
    }

    pub fn host_partition(&self) -> BufferPartition {
        let n = self.class_buffers.len();
        BufferPartition { port_total: self.host_class_buffer * n as u64, per_class: vec![self.host_class_buffer; n] }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    #[default]
    Tcp,
    /// TCP paused and resumed by cross-queue probe feedback.
    TcpPlus,
    Ledbat,
    TcpLp,
    NearOpt,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Tcp => "tcp",
            Protocol::TcpPlus => "tcp-plus",
            Protocol::Ledbat => "ledbat",
            Protocol::TcpLp => "tcp-lp",
            Protocol::NearOpt => "near-opt",
        }
    }
}

/// Transport used by one priority class, with every tunable.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportConfig {
    pub protocol: Protocol,
    pub tcp: TcpConfig,
    pub ledbat: LedbatConfig,
    pub tcp_lp: TcpLpConfig,
    pub cqcn: CqcnConfig,
    pub near_opt: NearOptConfig,
}

impl TransportConfig {
    pub fn of(protocol: Protocol) -> Self {
        TransportConfig { protocol, ..Default::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Utilization timeline bin width.
    pub util_bin_us: u64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { util_bin_us: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Flows arrive during `[0, duration)`.
    pub duration_us: u64,
    /// Extra simulated time after the last arrival for flows to finish.
    #[serde(default = "default_drain")]
    pub drain_us: u64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub topology: TopologyConfig,
    #[serde(default)]
    pub fabric: FabricConfig,
    #[serde(default = "default_transports")]
    pub transports: Vec<TransportConfig>,
    pub workload: WorkloadConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_drain() -> u64 {
    100_000
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

fn default_transports() -> Vec<TransportConfig> {
    vec![TransportConfig::default(), TransportConfig::default()]
}

impl ScenarioConfig {
    /// A config with the default fabric and transports around `workload`.
    pub fn new(name: &str, duration_us: u64, workload: WorkloadConfig) -> Self {
        ScenarioConfig {
            name: name.to_string(),
            duration_us,
            drain_us: default_drain(),
            seeds: default_seeds(),
            topology: TopologyConfig::default(),
            fabric: FabricConfig::default(),
            transports: default_transports(),
            workload,
            output: OutputConfig::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    /// Normalized form: every field, defaults included.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn duration(&self) -> SimTime {
        SimTime::from_micros(self.duration_us)
    }

    pub fn end_time(&self) -> SimTime {
        SimTime::from_micros(self.duration_us + self.drain_us)
    }

    pub fn classes(&self) -> usize {
        self.transports.len()
    }

    /// Label of the class-1 transport, used in output file names.
    pub fn lp_label(&self) -> &'static str {
        self.transports.get(1).map_or("none", |t| t.protocol.as_str())
    }

    pub fn uses(&self, p: Protocol) -> bool {
        self.transports.iter().any(|t| t.protocol == p)
    }

    /// Every violated constraint, each naming its field.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut bad = |field: &str, why: String| v.push(format!("{field}: {why}"));
        let t = &self.topology;
        if t.nodes < 2 {
            bad("topology.nodes", format!("{} given, at least 2 hosts are needed", t.nodes));
        }
        if t.link_rate_mbps == 0 {
            bad("topology.link_rate_mbps", "must be positive".into());
        }
        if t.base_rtt_us == 0 {
            bad("topology.base_rtt_us", "must be positive".into());
        }
        if self.duration_us == 0 {
            bad("duration_us", "must be positive".into());
        }
        if self.seeds.is_empty() {
            bad("seeds", "at least one seed is required".into());
        }
        if self.output.util_bin_us == 0 {
            bad("output.util_bin_us", "must be positive".into());
        }

        let f = &self.fabric;
        let classes = self.classes();
        if classes == 0 || classes > MAX_CLASSES {
            bad("transports", format!("{classes} classes configured, 1 to {MAX_CLASSES} supported"));
        }
        if f.class_buffers.len() != classes {
            bad(
                "fabric.class_buffers",
                format!("{} allocations for {classes} transport classes", f.class_buffers.len()),
            );
        }
        let sum: u64 = f.class_buffers.iter().sum();
        if sum > f.port_buffer {
            bad("fabric.class_buffers", format!("sum {sum} B exceeds fabric.port_buffer {} B", f.port_buffer));
        }
        if f.class_buffers.iter().any(|b| *b < u64::from(MTU)) {
            bad("fabric.class_buffers", format!("every class needs at least {MTU} B"));
        }
        let wfq = f.scheduler == SchedulerKind::Wfq || f.host_scheduler == Some(SchedulerKind::Wfq);
        if wfq && f.wfq_weights.len() != classes {
            bad("fabric.wfq_weights", format!("{} weights for {classes} classes", f.wfq_weights.len()));
        }
        if wfq && f.wfq_weights.contains(&0) {
            bad("fabric.wfq_weights", "weights must be positive".into());
        }
        if !(0.0..=1.0).contains(&f.ecn_threshold) {
            bad("fabric.ecn_threshold", format!("{} is not a fraction", f.ecn_threshold));
        }
        if f.driver_queue_packets == 0 {
            bad("fabric.driver_queue_packets", "must be positive".into());
        }
        if f.host_class_buffer < u64::from(MTU) {
            bad("fabric.host_class_buffer", format!("must hold at least {MTU} B"));
        }

        for (i, tr) in self.transports.iter().enumerate() {
            let checks = [
                ("tcp", tr.tcp.validate()),
                ("ledbat", tr.ledbat.validate()),
                ("tcp_lp", tr.tcp_lp.validate()),
                ("cqcn", tr.cqcn.validate()),
            ];
            for (section, r) in checks {
                if let Err(e) = r {
                    bad(&format!("transports.{i}.{section}"), e.to_string());
                }
            }
            if tr.near_opt.timeout_us == 0 {
                bad(&format!("transports.{i}.near_opt.timeout_us"), "must be positive".into());
            }
            if tr.near_opt.round_us == Some(0) {
                bad(&format!("transports.{i}.near_opt.round_us"), "must be positive".into());
            }
        }

        let wl_classes = self.workload.classes();
        if classes < wl_classes {
            bad("transports", format!("workload uses {wl_classes} classes but {classes} have a transport"));
        }
        let node = |field: &str, n: u16, bad: &mut dyn FnMut(&str, String)| {
            if n >= t.nodes {
                bad(field, format!("node {n} does not exist with {} nodes", t.nodes));
            }
        };
        let load = |field: &str, x: f64, bad: &mut dyn FnMut(&str, String)| {
            if !(0.0..1.0).contains(&x) {
                bad(field, format!("{x} must lie in [0, 1)"));
            }
        };
        let size = |field: &str, s: &SizeSpec, bad: &mut dyn FnMut(&str, String)| {
            if matches!(s, SizeSpec::Uniform(0) | SizeSpec::Fixed(0)) {
                bad(field, "flow size must be positive".into());
            }
        };
        match &self.workload {
            WorkloadConfig::Das { size: s, load: l, client } => {
                size("workload.size", s, &mut bad);
                load("workload.load", *l, &mut bad);
                if let Some(c) = client {
                    node("workload.client", *c, &mut bad);
                }
                if t.nodes < 3 {
                    bad("topology.nodes", "das needs a client and two servers".into());
                }
            }
            WorkloadConfig::Sjf { size: s, load: l, max_size, .. } => {
                size("workload.size", s, &mut bad);
                load("workload.load", *l, &mut bad);
                if *max_size == Some(0) {
                    bad("workload.max_size", "must be positive".into());
                }
            }
            WorkloadConfig::OnOff { workers, update_size, hp_load, lp_size, lp_load, parameter_server } => {
                if *workers == 0 || *workers >= t.nodes {
                    bad("workload.workers", format!("{workers} workers need 1 to {} non-server hosts", t.nodes - 1));
                }
                if *update_size == 0 {
                    bad("workload.update_size", "must be positive".into());
                }
                if !(*hp_load > 0.0 && *hp_load < 1.0) {
                    bad("workload.hp_load", format!("{hp_load} must lie in (0, 1)"));
                }
                size("workload.lp_size", lp_size, &mut bad);
                load("workload.lp_load", *lp_load, &mut bad);
                node("workload.parameter_server", *parameter_server, &mut bad);
            }
            WorkloadConfig::Hybrid { size: s, hp_load, lp_load, total_load, client } => {
                size("workload.size", s, &mut bad);
                load("workload.hp_load", *hp_load, &mut bad);
                load("workload.lp_load", *lp_load, &mut bad);
                load("workload.total_load", *total_load, &mut bad);
                node("workload.client", *client, &mut bad);
            }
        }
        v
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(v))
        }
    }

    /// Replaces the value at a dotted path (`transports.1.tcp.rto_min_us`).
    /// The path must already exist in the normalized form.
    pub fn with_override(&self, key: &str, value: &toml::Value) -> Result<Self, ConfigError> {
        let err = |reason: String| ConfigError::Override { key: key.to_string(), reason };
        let mut doc = toml::Value::try_from(self).map_err(|e| err(e.to_string()))?;
        let mut cur = &mut doc;
        let parts: Vec<&str> = key.split('.').collect();
        for (depth, part) in parts.iter().enumerate() {
            let at = parts[..depth].join(".");
            cur = match cur {
                toml::Value::Table(t) => t.get_mut(*part).ok_or_else(|| {
                    err(format!("no field {part:?} under {:?}", if at.is_empty() { "<root>" } else { &at }))
                })?,
                toml::Value::Array(a) => {
                    let i: usize =
                        part.parse().map_err(|_| err(format!("{at} is a list, {part:?} is not an index")))?;
                    let len = a.len();
                    a.get_mut(i).ok_or_else(|| err(format!("index {i} out of range for {at} (length {len})")))?
                }
                _ => return Err(err(format!("{at} is a scalar and has no field {part:?}"))),
            };
        }
        *cur = value.clone();
        doc.try_into().map_err(|e: toml::de::Error| err(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "toy"
duration_us = 5000

[workload]
kind = "das"
size = { uniform = 1048576 }
load = 0.3
"#;

    #[test]
    fn defaults_fill_in() {
        let c = ScenarioConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.topology.nodes, 40);
        assert_eq!(c.topology.link_rate_bps(), 10_000_000_000);
        assert_eq!(c.topology.propagation_delay(), SimTime::from_micros(25));
        assert_eq!(c.fabric.class_buffers, vec![131_072, 65_536]);
        assert_eq!(c.fabric.port_buffer, 196_608);
        assert_eq!(c.transports.len(), 2);
        assert_eq!(c.transports[1].tcp, TcpConfig::default());
        c.validate().unwrap();
    }

    #[test]
    fn round_trip_is_byte_stable() {
        let c = ScenarioConfig::parse(MINIMAL).unwrap();
        let once = c.to_toml();
        let back = ScenarioConfig::parse(&once).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_toml(), once);
    }

    #[test]
    fn zero_nodes_names_the_field() {
        let mut c = ScenarioConfig::parse(MINIMAL).unwrap();
        c.topology.nodes = 0;
        let v = c.violations();
        assert!(v.iter().any(|m| m.starts_with("topology.nodes")), "{v:?}");
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("topology.nodes"));
    }

    #[test]
    fn several_violations_listed() {
        let mut c = ScenarioConfig::parse(MINIMAL).unwrap();
        c.duration_us = 0;
        c.fabric.class_buffers = vec![196_608, 65_536];
        c.transports[1].tcp.initial_window = 0;
        let v = c.violations();
        assert!(v.iter().any(|m| m.starts_with("duration_us")));
        assert!(v.iter().any(|m| m.starts_with("fabric.class_buffers")));
        assert!(v.iter().any(|m| m.starts_with("transports.1.tcp")));
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = MINIMAL.replace("load = 0.3", "load = 0.3\nbogus = 1");
        assert!(matches!(ScenarioConfig::parse(&text), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn class_without_buffer_rejected() {
        let mut c = ScenarioConfig::parse(MINIMAL).unwrap();
        c.transports.push(TransportConfig::default());
        assert!(c.violations().iter().any(|m| m.contains("3 transport classes")));
    }

    #[test]
    fn override_existing_paths_only() {
        let c = ScenarioConfig::parse(MINIMAL).unwrap();
        let d = c.with_override("transports.1.tcp.rto_min_us", &toml::Value::Integer(5000)).unwrap();
        assert_eq!(d.transports[1].tcp.rto_min_us, 5000);
        assert_eq!(d.transports[0].tcp.rto_min_us, 1000);
        let d = c.with_override("fabric.class_buffers.1", &toml::Value::Integer(24_576)).unwrap();
        assert_eq!(d.fabric.class_buffers, vec![131_072, 24_576]);
        assert!(matches!(
            c.with_override("transports.1.tcp.rto_max", &toml::Value::Integer(1)),
            Err(ConfigError::Override { .. })
        ));
        assert!(c.with_override("transports.5.tcp.rto_min_us", &toml::Value::Integer(1)).is_err());
        assert!(c.with_override("transports.1.tcp.rto_min_us", &toml::Value::String("x".into())).is_err());
    }
}
