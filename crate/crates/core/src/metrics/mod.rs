//! Per-flow outcomes, percentiles and paired normalization.

mod emit;
mod paired;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::fabric::FlowId;
use crate::time::SimTime;
use crate::workloads::{FlowSpec, SizeClass};

pub use emit::{cdf_points, flows_csv, output_stem, write_cdf, write_flows_csv, write_paired_csv, write_summary};
pub use paired::{normalize_paired, PairedResult, PairedRow};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("percentile of an empty sample set")]
    Empty,
    #[error("percentile {0} outside (0, 100]")]
    BadPercentile(f64),
    #[error("paired runs used different traces (fingerprints {0:016x} vs {1:016x})")]
    TraceMismatch(u64, u64),
    #[error("flow {0} completed twice")]
    DoubleCompletion(u32),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Order-statistic percentile: the value at 1-based rank `floor(p/100 * n) + 1`
/// (clamped to `n`) of the ascending sort.
pub fn percentile<T: Copy + PartialOrd>(samples: &[T], p: f64) -> Result<T, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::Empty);
    }
    if !(p > 0.0 && p <= 100.0) {
        return Err(MetricsError::BadPercentile(p));
    }
    let mut v = samples.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("samples are comparable"));
    Ok(v[nearest_rank(v.len(), p) - 1])
}

/// Same as [`percentile`] for data already sorted ascending.
pub fn percentile_sorted<T: Copy>(sorted: &[T], p: f64) -> Result<T, MetricsError> {
    if sorted.is_empty() {
        return Err(MetricsError::Empty);
    }
    if !(p > 0.0 && p <= 100.0) {
        return Err(MetricsError::BadPercentile(p));
    }
    Ok(sorted[nearest_rank(sorted.len(), p) - 1])
}

fn nearest_rank(n: usize, p: f64) -> usize {
    // the epsilon absorbs float error in p * n when the product is integral
    let rank = (p / 100.0 * n as f64 + 1e-9).floor() as usize + 1;
    rank.clamp(1, n)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowRecord {
    pub flow_id: FlowId,
    pub size: u64,
    pub class: u8,
    pub size_class: SizeClass,
    pub arrival: SimTime,
    pub completion: SimTime,
    pub packets_sent: u64,
    pub retransmissions: u64,
    pub spurious: u64,
}

impl FlowRecord {
    pub fn fct(&self) -> SimTime {
        self.completion - self.arrival
    }

    pub fn retransmission_rate(&self) -> f64 {
        retransmission_rate(self.packets_sent, self.retransmissions)
    }
}

pub fn retransmission_rate(sent: u64, retransmitted: u64) -> f64 {
    if sent == 0 {
        0.0
    } else {
        retransmitted as f64 / sent as f64
    }
}

/// Builds the record for a flow whose last byte was just acknowledged.
pub fn record_completion(
    spec: &FlowSpec,
    now: SimTime,
    packets_sent: u64,
    retransmissions: u64,
    spurious: u64,
) -> FlowRecord {
    FlowRecord {
        flow_id: spec.id,
        size: spec.size,
        class: spec.class,
        size_class: SizeClass::of(spec.size),
        arrival: spec.arrival,
        completion: now,
        packets_sent,
        retransmissions,
        spurious,
    }
}

/// A flow still running when the run ended.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CensoredFlow {
    pub flow_id: FlowId,
    pub class: u8,
    pub size: u64,
    pub packets_sent: u64,
    pub retransmissions: u64,
    pub spurious: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunCounters {
    pub events: u64,
    pub drops_by_class: Vec<u64>,
    pub host_drops: u64,
    pub protocol_faults: u64,
    pub timeouts: u64,
    pub probes_sent: u64,
    pub pauses: u64,
    /// Retransmissions sent by TCP+ flows while their channel was paused.
    pub retransmissions_while_paused: u64,
    /// Data drops of TCP+ flows while their channel was paused.
    pub drops_while_paused: u64,
    pub nearopt_stalls: u64,
}

/// Fraction of a port's capacity used per time bin.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Utilization {
    pub port: usize,
    pub bin: SimTime,
    pub fractions: Vec<f64>,
}

impl Utilization {
    /// Lowest mean utilization over any window of `bins` consecutive bins in `[from, to)`.
    pub fn min_window_mean(&self, bins: usize, from: usize, to: usize) -> Option<f64> {
        let to = to.min(self.fractions.len());
        if bins == 0 || to < from + bins {
            return None;
        }
        let s = &self.fractions[from..to];
        let mut sum: f64 = s[..bins].iter().sum();
        let mut lo = sum;
        for i in bins..s.len() {
            sum += s[i] - s[i - bins];
            lo = lo.min(sum);
        }
        Some(lo / bins as f64)
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunSummary {
    pub scenario: String,
    /// Label of the low-priority (class 1) transport.
    pub transport: String,
    pub seed: u64,
    pub trace_fingerprint: u64,
    pub records: Vec<FlowRecord>,
    pub censored: Vec<CensoredFlow>,
    pub utilization: Utilization,
    pub counters: RunCounters,
    pub end_time: SimTime,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Stats {
    pub count: usize,
    pub mean: f64,
    pub p50: f64,
    pub p80: f64,
    pub p99: f64,
    pub p999: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let p = |q| percentile_sorted(&v, q).expect("nonempty");
        Some(Stats {
            count: v.len(),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            p50: p(50.0),
            p80: p(80.0),
            p99: p(99.0),
            p999: p(99.9),
            max: v[v.len() - 1],
        })
    }
}

impl RunSummary {
    pub fn class_records(&self, class: u8) -> impl Iterator<Item = &FlowRecord> {
        self.records.iter().filter(move |r| r.class == class)
    }

    /// FCTs in seconds of completed flows of `class`, optionally one size class.
    pub fn fcts(&self, class: u8, size_class: Option<SizeClass>) -> Vec<f64> {
        self.class_records(class)
            .filter(|r| size_class.is_none_or(|s| r.size_class == s))
            .map(|r| r.fct().as_secs_f64())
            .collect()
    }

    pub fn fct_stats(&self, class: u8, size_class: Option<SizeClass>) -> Option<Stats> {
        Stats::of(&self.fcts(class, size_class))
    }

    /// Per-flow retransmission rates of `class`, censored flows included.
    pub fn retransmission_rates(&self, class: u8) -> Vec<f64> {
        self.class_records(class)
            .map(FlowRecord::retransmission_rate)
            .chain(
                self.censored
                    .iter()
                    .filter(|c| c.class == class && c.packets_sent > 0)
                    .map(|c| retransmission_rate(c.packets_sent, c.retransmissions)),
            )
            .collect()
    }

    pub fn total_retransmissions(&self, class: u8) -> (u64, u64) {
        let mut retx = 0;
        let mut spurious = 0;
        for r in self.class_records(class) {
            retx += r.retransmissions;
            spurious += r.spurious;
        }
        for c in self.censored.iter().filter(|c| c.class == class) {
            retx += c.retransmissions;
            spurious += c.spurious;
        }
        (retx, spurious)
    }

    pub fn censored_count(&self, class: u8) -> usize {
        self.censored.iter().filter(|c| c.class == class).count()
    }

    /// Summary table keyed by `"class<k>/<size class or all>"`.
    pub fn table(&self) -> BTreeMap<String, Stats> {
        let mut out = BTreeMap::new();
        let classes: std::collections::BTreeSet<u8> = self.records.iter().map(|r| r.class).collect();
        for c in classes {
            if let Some(s) = self.fct_stats(c, None) {
                out.insert(format!("class{c}/all"), s);
            }
            for sc in SizeClass::ALL {
                if let Some(s) = self.fct_stats(c, Some(sc)) {
                    out.insert(format!("class{c}/{}", sc.as_str()), s);
                }
            }
        }
        out
    }
}

/// FNV-1a over every field of the trace.
pub fn trace_fingerprint(flows: &[FlowSpec]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    for f in flows {
        eat(u64::from(f.id.0));
        eat(u64::from(f.src.0));
        eat(u64::from(f.dst.0));
        eat(f.size);
        eat(u64::from(f.class));
        eat(f.arrival.as_nanos());
        eat(f.twin_of.map_or(u64::MAX, |t| u64::from(t.0)));
    }
    h
}
