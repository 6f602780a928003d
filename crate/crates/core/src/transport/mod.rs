//! Window-based senders and the receiver.

mod cqcn;
mod cubic;
mod ledbat;
mod receiver;
mod rto;
mod scoreboard;
mod tcp;
mod tcplp;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::SimTime;

pub use cqcn::{ProbeChannel, ProbeFeedback};
pub use cubic::{CubicState, HyStart};
pub use ledbat::LedbatState;
pub use receiver::TcpReceiver;
pub use rto::{backed_off, compute_rto, RtoPolicy, RttEstimator};
pub use scoreboard::RangeSet;
pub use tcp::{CcSnapshot, Controller, Phase, Segment, SenderStats, TcpSender};
pub use tcplp::{LpSignal, TcpLpState};

#[derive(Debug, Error, PartialEq)]
pub enum TransportError {
    #[error("initial window must be at least one packet")]
    ZeroInitialWindow,
    #[error("rto_min must be positive")]
    ZeroRtoMin,
    #[error("max_rto ({max_us}us) is below rto_min ({min_us}us)")]
    MaxRtoBelowMin { min_us: u64, max_us: u64 },
    #[error("{which} buffer must hold at least one segment")]
    TinyBuffer { which: &'static str },
    #[error("parameter {name} = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    NewReno,
    #[default]
    Cubic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TcpConfig {
    pub algorithm: Algorithm,
    pub sack_enabled: bool,
    /// Packets.
    pub initial_window: u32,
    pub rto_min_us: u64,
    /// Timeout before the first RTT sample; defaults to `rto_min_us`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_rto_us: Option<u64>,
    pub max_rto_us: u64,
    pub send_buffer: u64,
    pub receive_buffer: u64,
    pub dupack_threshold: u32,
    pub cubic_c: f64,
    pub cubic_beta: f64,
    /// Hybrid slow start for Cubic.
    pub hystart: bool,
}

impl Default for TcpConfig {
    fn default() -> Self {
        TcpConfig {
            algorithm: Algorithm::Cubic,
            sack_enabled: true,
            initial_window: 2,
            rto_min_us: 1000,
            initial_rto_us: None,
            max_rto_us: 1_000_000,
            send_buffer: 1 << 20,
            receive_buffer: 1 << 20,
            dupack_threshold: 3,
            cubic_c: 0.4,
            cubic_beta: 0.7,
            hystart: true,
        }
    }
}

impl TcpConfig {
    pub fn validate(&self) -> Result<(), TransportError> {
        if self.initial_window == 0 {
            return Err(TransportError::ZeroInitialWindow);
        }
        if self.rto_min_us == 0 {
            return Err(TransportError::ZeroRtoMin);
        }
        if self.max_rto_us < self.rto_min_us {
            return Err(TransportError::MaxRtoBelowMin { min_us: self.rto_min_us, max_us: self.max_rto_us });
        }
        let mss = u64::from(crate::fabric::MSS);
        if self.send_buffer < mss {
            return Err(TransportError::TinyBuffer { which: "send" });
        }
        if self.receive_buffer < mss {
            return Err(TransportError::TinyBuffer { which: "receive" });
        }
        if self.dupack_threshold == 0 {
            return Err(TransportError::OutOfRange { name: "dupack_threshold", value: 0.0 });
        }
        if !(self.cubic_c > 0.0) {
            return Err(TransportError::OutOfRange { name: "cubic_c", value: self.cubic_c });
        }
        if !(self.cubic_beta > 0.0 && self.cubic_beta < 1.0) {
            return Err(TransportError::OutOfRange { name: "cubic_beta", value: self.cubic_beta });
        }
        Ok(())
    }

    pub fn rto_policy(&self) -> RtoPolicy {
        RtoPolicy {
            rto_min: SimTime::from_micros(self.rto_min_us),
            max_rto: SimTime::from_micros(self.max_rto_us),
            initial_rto: SimTime::from_micros(self.initial_rto_us.unwrap_or(self.rto_min_us)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LedbatConfig {
    pub target_us: u64,
    pub gain: f64,
    /// Samples in the current-delay minimum filter.
    pub delay_filter: usize,
}

impl Default for LedbatConfig {
    fn default() -> Self {
        LedbatConfig { target_us: 3200, gain: 1.0, delay_filter: 4 }
    }
}

impl LedbatConfig {
    pub fn validate(&self) -> Result<(), TransportError> {
        if self.target_us == 0 {
            return Err(TransportError::OutOfRange { name: "ledbat.target_us", value: 0.0 });
        }
        if !(self.gain > 0.0) {
            return Err(TransportError::OutOfRange { name: "ledbat.gain", value: self.gain });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TcpLpConfig {
    pub delta: f64,
    /// Inference window length in smoothed RTTs.
    pub inference_rtts: f64,
}

impl Default for TcpLpConfig {
    fn default() -> Self {
        TcpLpConfig { delta: 0.15, inference_rtts: 1.0 }
    }
}

impl TcpLpConfig {
    pub fn validate(&self) -> Result<(), TransportError> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(TransportError::OutOfRange { name: "tcp_lp.delta", value: self.delta });
        }
        if !(self.inference_rtts > 0.0) {
            return Err(TransportError::OutOfRange { name: "tcp_lp.inference_rtts", value: self.inference_rtts });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CqcnConfig {
    pub probe_interval_us: u64,
    pub probe_bytes: u32,
}

impl Default for CqcnConfig {
    fn default() -> Self {
        CqcnConfig { probe_interval_us: 100, probe_bytes: crate::fabric::PROBE_BYTES }
    }
}

impl CqcnConfig {
    pub fn validate(&self) -> Result<(), TransportError> {
        if self.probe_interval_us == 0 {
            return Err(TransportError::OutOfRange { name: "cqcn.probe_interval_us", value: 0.0 });
        }
        if self.probe_bytes == 0 {
            return Err(TransportError::OutOfRange { name: "cqcn.probe_bytes", value: 0.0 });
        }
        Ok(())
    }
}
