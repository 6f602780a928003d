use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{MetricsError, PairedResult, RunCounters, RunSummary, Stats};
use crate::workloads::SizeClass;

pub fn output_stem(scenario: &str, transport: &str, seed: u64) -> String {
    format!("{scenario}__{transport}__seed{seed}")
}

pub fn flows_csv(summary: &RunSummary) -> String {
    let mut s = String::from("flow_id,size,class,size_class,arrival_ns,fct_ns,retx,spurious\n");
    for r in &summary.records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.flow_id.0,
            r.size,
            r.class,
            r.size_class.as_str(),
            r.arrival.as_nanos(),
            r.fct().as_nanos(),
            r.retransmissions,
            r.spurious
        );
    }
    s
}

/// `(value, cumulative fraction)` steps of the empirical CDF.
pub fn cdf_points(values: &[f64]) -> Vec<(f64, f64)> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = v.len() as f64;
    v.iter().enumerate().map(|(i, &x)| (x, (i + 1) as f64 / n)).collect()
}

fn write(path: &Path, body: &str) -> Result<(), MetricsError> {
    std::fs::write(path, body).map_err(|source| MetricsError::Io { path: path.display().to_string(), source })
}

pub fn write_flows_csv(dir: &Path, summary: &RunSummary) -> Result<PathBuf, MetricsError> {
    let path = dir.join(format!("{}.csv", output_stem(&summary.scenario, &summary.transport, summary.seed)));
    write(&path, &flows_csv(summary))?;
    Ok(path)
}

pub fn write_cdf(path: &Path, values: &[f64]) -> Result<(), MetricsError> {
    let mut s = String::from("value,cumulative_fraction\n");
    for (x, f) in cdf_points(values) {
        let _ = writeln!(s, "{x},{f}");
    }
    write(path, &s)
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    scenario: &'a str,
    transport: &'a str,
    seed: u64,
    trace_fingerprint: String,
    completed: usize,
    censored: usize,
    end_time_ns: u64,
    counters: &'a RunCounters,
    #[serde(skip_serializing_if = "Option::is_none")]
    lp_retransmission_rate: Option<Stats>,
    fct_seconds: BTreeMap<String, Stats>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    normalized_fct: BTreeMap<String, Stats>,
}

/// Writes `<stem>.summary.toml` and the FCT / retransmission-rate CDFs beside it.
pub fn write_summary(
    dir: &Path,
    summary: &RunSummary,
    paired: Option<&PairedResult>,
) -> Result<Vec<PathBuf>, MetricsError> {
    let stem = output_stem(&summary.scenario, &summary.transport, summary.seed);
    let mut normalized = BTreeMap::new();
    if let Some(p) = paired {
        if let Some(s) = p.stats(1, None) {
            normalized.insert("class1/all".to_string(), s);
        }
        for sc in SizeClass::ALL {
            if let Some(s) = p.stats(1, Some(sc)) {
                normalized.insert(format!("class1/{}", sc.as_str()), s);
            }
        }
    }
    let file = SummaryFile {
        scenario: &summary.scenario,
        transport: &summary.transport,
        seed: summary.seed,
        trace_fingerprint: format!("{:016x}", summary.trace_fingerprint),
        completed: summary.records.len(),
        censored: summary.censored.len(),
        end_time_ns: summary.end_time.as_nanos(),
        counters: &summary.counters,
        lp_retransmission_rate: Stats::of(&summary.retransmission_rates(1)),
        fct_seconds: summary.table(),
        normalized_fct: normalized,
    };
    let body = toml::to_string(&file).expect("summary serializes");
    let mut out = Vec::new();
    let path = dir.join(format!("{stem}.summary.toml"));
    write(&path, &body)?;
    out.push(path);

    let path = dir.join(format!("{stem}.fct_class1.cdf"));
    write_cdf(&path, &summary.fcts(1, None))?;
    out.push(path);
    let path = dir.join(format!("{stem}.retx_class1.cdf"));
    write_cdf(&path, &summary.retransmission_rates(1))?;
    out.push(path);
    if let Some(p) = paired {
        for sc in SizeClass::ALL {
            let r = p.ratios(1, Some(sc));
            if r.is_empty() {
                continue;
            }
            let path = dir.join(format!("{stem}.normalized_{}.cdf", sc.as_str()));
            write_cdf(&path, &r)?;
            out.push(path);
        }
    }
    Ok(out)
}

pub fn write_paired_csv(path: &Path, paired: &PairedResult) -> Result<(), MetricsError> {
    let mut s = String::from("flow_id,size,class,size_class,fct_candidate_ns,fct_baseline_ns,normalized_fct\n");
    for r in &paired.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.flow_id.0,
            r.size,
            r.class,
            r.size_class.as_str(),
            r.fct_candidate_ns,
            r.fct_baseline_ns,
            r.ratio
        );
    }
    write(path, &s)
}
