//! Packet-level simulator for studying low-priority transports under strict
//! switch prioritization.

pub mod config;
pub mod engine;
pub mod fabric;
pub mod metrics;
pub mod nearopt;
pub mod network;
pub mod par;
pub mod rng;
pub mod runner;
pub mod time;
pub mod transport;
pub mod workloads;
