//! Oracle transport with global loss and per-link rate knowledge.

mod ledger;
mod sender;
mod tracker;

use serde::{Deserialize, Serialize};

pub use ledger::LossLedger;
pub use sender::{NearOptSender, NearOptStats, PaceDecision};
pub use tracker::{fair_rate, path_rate, LinkTracker};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NearOptConfig {
    /// Rate round length; defaults to each link's propagation delay.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub round_us: Option<u64>,
    pub timeout_us: u64,
    pub inflight_cap: u64,
}

impl Default for NearOptConfig {
    fn default() -> Self {
        NearOptConfig { round_us: None, timeout_us: 1000, inflight_cap: 1 << 20 }
    }
}
