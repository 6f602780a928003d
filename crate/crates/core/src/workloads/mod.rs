//! Flow-arrival traces for the experiment scenarios.

mod dist;
mod generators;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fabric::{FlowId, NodeId};
use crate::time::SimTime;

pub use dist::{EmpiricalCdf, SizeDistribution, SizeSpec};
pub use generators::{gen_das, gen_hybrid, gen_onoff, gen_sjf, generate, onoff_period, Topology};

pub const SMALL_FLOW_LIMIT: u64 = 50_000;
pub const MEDIUM_FLOW_LIMIT: u64 = 1_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum WorkloadError {
    #[error("load {0} must lie in [0, 1)")]
    BadLoad(f64),
    #[error("mean flow size must be positive")]
    ZeroSize,
    #[error("malformed CDF: {0}")]
    BadCdf(String),
    #[error("no builtin CDF named {0:?}")]
    UnknownBuiltin(String),
    #[error("cannot read CDF file {path}: {reason}")]
    CdfFile { path: String, reason: String },
    #[error("{0}")]
    Shape(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeClass {
    Small,
    Medium,
    Long,
}

impl SizeClass {
    pub fn of(size: u64) -> SizeClass {
        if size < SMALL_FLOW_LIMIT {
            SizeClass::Small
        } else if size <= MEDIUM_FLOW_LIMIT {
            SizeClass::Medium
        } else {
            SizeClass::Long
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SizeClass::Small => "small",
            SizeClass::Medium => "medium",
            SizeClass::Long => "long",
        }
    }

    pub const ALL: [SizeClass; 3] = [SizeClass::Small, SizeClass::Medium, SizeClass::Long];
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FlowSpec {
    pub id: FlowId,
    pub src: NodeId,
    pub dst: NodeId,
    pub size: u64,
    pub class: u8,
    pub arrival: SimTime,
    pub twin_of: Option<FlowId>,
}

/// Poisson arrival rate (flows per second) that offers `load` of `capacity_bps`.
pub fn load_to_rate(load: f64, mean_size: f64, capacity_bps: f64) -> Result<f64, WorkloadError> {
    if !(0.0..1.0).contains(&load) {
        return Err(WorkloadError::BadLoad(load));
    }
    if !(mean_size > 0.0) {
        return Err(WorkloadError::ZeroSize);
    }
    Ok(load * capacity_bps / (mean_size * 8.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WorkloadConfig {
    /// Requests answered twice: a primary at class 0 and a twin at class 1.
    Das {
        size: SizeSpec,
        /// Offered load per class on each client link.
        load: f64,
        /// Send every request to this node; otherwise each request picks a client at random.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        client: Option<u16>,
    },
    /// Uniform random pairs; flows at or above the threshold go low priority.
    Sjf {
        size: SizeSpec,
        /// Fraction of aggregate host capacity.
        load: f64,
        #[serde(default = "default_long_threshold")]
        long_threshold: u64,
        /// Sizes above this are clipped (keeps heavy tails within short runs).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_size: Option<u64>,
    },
    /// Periodic incast to a parameter server plus Poisson low-priority traffic into it.
    OnOff {
        workers: u16,
        update_size: u64,
        hp_load: f64,
        lp_size: SizeSpec,
        lp_load: f64,
        #[serde(default)]
        parameter_server: u16,
    },
    /// Two Poisson processes of fixed-size fetches toward one client.
    Hybrid {
        size: SizeSpec,
        hp_load: f64,
        lp_load: f64,
        #[serde(default = "default_total_load")]
        total_load: f64,
        #[serde(default)]
        client: u16,
    },
}

fn default_long_threshold() -> u64 {
    MEDIUM_FLOW_LIMIT
}

fn default_total_load() -> f64 {
    0.8
}

impl WorkloadConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            WorkloadConfig::Das { .. } => "das",
            WorkloadConfig::Sjf { .. } => "sjf",
            WorkloadConfig::OnOff { .. } => "on-off",
            WorkloadConfig::Hybrid { .. } => "hybrid",
        }
    }

    /// Priority classes the generated trace uses.
    pub fn classes(&self) -> usize {
        2
    }
}

/// Renumbers a trace in arrival order (stable), remapping twin links.
pub(crate) fn finalize(mut flows: Vec<FlowSpec>) -> Vec<FlowSpec> {
    flows.sort_by_key(|f| f.arrival);
    let mut remap = std::collections::HashMap::with_capacity(flows.len());
    for (i, f) in flows.iter().enumerate() {
        remap.insert(f.id, FlowId(i as u32));
    }
    for f in flows.iter_mut() {
        f.id = remap[&f.id];
        f.twin_of = f.twin_of.map(|t| remap[&t]);
    }
    flows
}
