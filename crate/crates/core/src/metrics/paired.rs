use std::collections::HashMap;

use super::{MetricsError, RunSummary, Stats};
use crate::fabric::FlowId;
use crate::workloads::SizeClass;

#[derive(Clone, Debug, PartialEq)]
pub struct PairedRow {
    pub flow_id: FlowId,
    pub size: u64,
    pub class: u8,
    pub size_class: SizeClass,
    pub fct_candidate_ns: u64,
    pub fct_baseline_ns: u64,
    pub ratio: f64,
}

/// Per-flow FCT of a candidate run divided by the baseline run on the same trace.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PairedResult {
    pub candidate: String,
    pub baseline: String,
    pub rows: Vec<PairedRow>,
    /// Completed only in the candidate run.
    pub only_candidate: Vec<FlowId>,
    /// Completed only in the baseline run.
    pub only_baseline: Vec<FlowId>,
}

pub fn normalize_paired(candidate: &RunSummary, baseline: &RunSummary) -> Result<PairedResult, MetricsError> {
    if candidate.trace_fingerprint != baseline.trace_fingerprint {
        return Err(MetricsError::TraceMismatch(candidate.trace_fingerprint, baseline.trace_fingerprint));
    }
    let base: HashMap<FlowId, &super::FlowRecord> = baseline.records.iter().map(|r| (r.flow_id, r)).collect();
    let mut out = PairedResult {
        candidate: candidate.transport.clone(),
        baseline: baseline.transport.clone(),
        ..Default::default()
    };
    let mut seen = std::collections::HashSet::new();
    for r in &candidate.records {
        match base.get(&r.flow_id) {
            Some(b) => {
                seen.insert(r.flow_id);
                let (c, bn) = (r.fct().as_nanos(), b.fct().as_nanos());
                out.rows.push(PairedRow {
                    flow_id: r.flow_id,
                    size: r.size,
                    class: r.class,
                    size_class: r.size_class,
                    fct_candidate_ns: c,
                    fct_baseline_ns: bn,
                    ratio: c as f64 / bn as f64,
                });
            }
            None => out.only_candidate.push(r.flow_id),
        }
    }
    out.only_baseline = baseline.records.iter().map(|r| r.flow_id).filter(|id| !seen.contains(id)).collect();
    out.rows.sort_by_key(|r| r.flow_id);
    out.only_candidate.sort();
    out.only_baseline.sort();
    Ok(out)
}

impl PairedResult {
    pub fn ratios(&self, class: u8, size_class: Option<SizeClass>) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.class == class && size_class.is_none_or(|s| r.size_class == s))
            .map(|r| r.ratio)
            .collect()
    }

    pub fn stats(&self, class: u8, size_class: Option<SizeClass>) -> Option<Stats> {
        Stats::of(&self.ratios(class, size_class))
    }
}
