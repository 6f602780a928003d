use std::path::Path;

use super::{finalize, load_to_rate, FlowSpec, SizeDistribution, WorkloadConfig, WorkloadError};
use crate::fabric::{FlowId, NodeId};
use crate::rng::RngStream;
use crate::time::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Topology {
    pub nodes: u16,
    pub link_rate_bps: u64,
}

impl Topology {
    fn rate(&self) -> f64 {
        self.link_rate_bps as f64
    }
}

fn shape(msg: impl Into<String>) -> WorkloadError {
    WorkloadError::Shape(msg.into())
}

/// Poisson arrival times in `[0, duration)`.
fn poisson(rng: &mut RngStream, rate: f64, duration: SimTime) -> Vec<SimTime> {
    let mut out = Vec::new();
    if rate <= 0.0 {
        return out;
    }
    let mut t = 0.0;
    let end = duration.as_secs_f64();
    loop {
        t += rng.exponential(rate).expect("rate is positive");
        if t >= end {
            return out;
        }
        out.push(SimTime::from_secs_f64(t));
    }
}

/// A node chosen uniformly from `0..nodes` excluding `skip`.
fn other_node(rng: &mut RngStream, nodes: u16, skip: &[u16]) -> NodeId {
    let choices = nodes as usize - skip.len();
    let mut k = rng.index(choices) as u16;
    let mut sorted = skip.to_vec();
    sorted.sort_unstable();
    for s in sorted {
        if k >= s {
            k += 1;
        }
    }
    NodeId(k)
}

fn check_node(topo: &Topology, node: u16, what: &str) -> Result<(), WorkloadError> {
    if node >= topo.nodes {
        return Err(shape(format!("{what} {node} is outside 0..{}", topo.nodes)));
    }
    Ok(())
}

pub fn gen_das(
    topo: &Topology,
    duration: SimTime,
    size: &SizeDistribution,
    load: f64,
    client: Option<u16>,
    seed: u64,
) -> Result<Vec<FlowSpec>, WorkloadError> {
    if let Some(c) = client {
        check_node(topo, c, "client")?;
    }
    if topo.nodes < 3 {
        return Err(shape("DAS needs at least two servers besides the client"));
    }
    let clients = if client.is_some() { 1.0 } else { f64::from(topo.nodes) };
    let lambda = load_to_rate(load, size.mean(), topo.rate())? * clients;
    let mut arrivals = RngStream::new(seed, "das.arrivals");
    let mut sizes = RngStream::new(seed, "das.sizes");
    let mut servers = RngStream::new(seed, "das.servers");
    let mut picks = RngStream::new(seed, "das.clients");
    let mut flows = Vec::new();
    for at in poisson(&mut arrivals, lambda, duration) {
        let s = size.sample(&mut sizes);
        let client = client.unwrap_or_else(|| picks.index(topo.nodes as usize) as u16);
        let a = other_node(&mut servers, topo.nodes, &[client]);
        let b = other_node(&mut servers, topo.nodes, &[client, a.0]);
        let primary = FlowId(flows.len() as u32);
        flows.push(FlowSpec {
            id: primary,
            src: a,
            dst: NodeId(client),
            size: s,
            class: 0,
            arrival: at,
            twin_of: None,
        });
        flows.push(FlowSpec {
            id: FlowId(flows.len() as u32),
            src: b,
            dst: NodeId(client),
            size: s,
            class: 1,
            arrival: at,
            twin_of: Some(primary),
        });
    }
    Ok(finalize(flows))
}

pub fn gen_sjf(
    topo: &Topology,
    duration: SimTime,
    size: &SizeDistribution,
    load: f64,
    long_threshold: u64,
    seed: u64,
) -> Result<Vec<FlowSpec>, WorkloadError> {
    if topo.nodes < 2 {
        return Err(shape("SJF needs at least two nodes"));
    }
    let capacity = topo.rate() * f64::from(topo.nodes);
    let lambda = load_to_rate(load, size.mean(), capacity)?;
    let mut arrivals = RngStream::new(seed, "sjf.arrivals");
    let mut sizes = RngStream::new(seed, "sjf.sizes");
    let mut pairs = RngStream::new(seed, "sjf.pairs");
    let mut flows = Vec::new();
    for at in poisson(&mut arrivals, lambda, duration) {
        let s = size.sample(&mut sizes);
        let src = other_node(&mut pairs, topo.nodes, &[]);
        let dst = other_node(&mut pairs, topo.nodes, &[src.0]);
        flows.push(FlowSpec {
            id: FlowId(flows.len() as u32),
            src,
            dst,
            size: s,
            class: u8::from(s >= long_threshold),
            arrival: at,
            twin_of: None,
        });
    }
    Ok(finalize(flows))
}

/// Incast period that offers `hp_load` of the parameter-server link.
pub fn onoff_period(workers: u16, update_size: u64, hp_load: f64, link_rate_bps: u64) -> SimTime {
    let bits = f64::from(workers) * update_size as f64 * 8.0;
    SimTime::from_secs_f64(bits / (hp_load * link_rate_bps as f64))
}

#[allow(clippy::too_many_arguments)]
pub fn gen_onoff(
    topo: &Topology,
    duration: SimTime,
    workers: u16,
    update_size: u64,
    hp_load: f64,
    lp_size: &SizeDistribution,
    lp_load: f64,
    parameter_server: u16,
    seed: u64,
) -> Result<Vec<FlowSpec>, WorkloadError> {
    check_node(topo, parameter_server, "parameter_server")?;
    if workers < 2 {
        return Err(shape("on-off needs at least two workers"));
    }
    if workers >= topo.nodes {
        return Err(shape(format!("{workers} workers do not fit in {} nodes", topo.nodes)));
    }
    if update_size == 0 {
        return Err(WorkloadError::ZeroSize);
    }
    if !(0.0..=1.0).contains(&hp_load) {
        return Err(WorkloadError::BadLoad(hp_load));
    }
    let lambda = load_to_rate(lp_load, lp_size.mean(), topo.rate())?;

    let mut flows = Vec::new();
    let worker_ids: Vec<NodeId> =
        (0..topo.nodes).filter(|n| *n != parameter_server).take(workers as usize).map(NodeId).collect();
    if hp_load > 0.0 {
        let period = onoff_period(workers, update_size, hp_load, topo.link_rate_bps);
        let mut at = period;
        while at < duration {
            for w in &worker_ids {
                flows.push(FlowSpec {
                    id: FlowId(flows.len() as u32),
                    src: *w,
                    dst: NodeId(parameter_server),
                    size: update_size,
                    class: 0,
                    arrival: at,
                    twin_of: None,
                });
            }
            at += period;
        }
    }

    let mut arrivals = RngStream::new(seed, "onoff.arrivals");
    let mut sizes = RngStream::new(seed, "onoff.sizes");
    let mut sources = RngStream::new(seed, "onoff.sources");
    for at in poisson(&mut arrivals, lambda, duration) {
        flows.push(FlowSpec {
            id: FlowId(flows.len() as u32),
            src: other_node(&mut sources, topo.nodes, &[parameter_server]),
            dst: NodeId(parameter_server),
            size: lp_size.sample(&mut sizes),
            class: 1,
            arrival: at,
            twin_of: None,
        });
    }
    Ok(finalize(flows))
}

#[allow(clippy::too_many_arguments)]
pub fn gen_hybrid(
    topo: &Topology,
    duration: SimTime,
    size: &SizeDistribution,
    hp_load: f64,
    lp_load: f64,
    total_load: f64,
    client: u16,
    seed: u64,
) -> Result<Vec<FlowSpec>, WorkloadError> {
    check_node(topo, client, "client")?;
    if topo.nodes < 2 {
        return Err(shape("hybrid needs at least one server"));
    }
    if hp_load + lp_load > total_load + 1e-9 {
        return Err(shape(format!("class loads {hp_load} + {lp_load} exceed the total {total_load}")));
    }
    let mut flows = Vec::new();
    for (class, load) in [(0u8, hp_load), (1u8, lp_load)] {
        let lambda = load_to_rate(load, size.mean(), topo.rate())?;
        let mut arrivals = RngStream::new(seed, &format!("hybrid.arrivals.{class}"));
        let mut sizes = RngStream::new(seed, &format!("hybrid.sizes.{class}"));
        let mut servers = RngStream::new(seed, &format!("hybrid.servers.{class}"));
        for at in poisson(&mut arrivals, lambda, duration) {
            flows.push(FlowSpec {
                id: FlowId(flows.len() as u32),
                src: other_node(&mut servers, topo.nodes, &[client]),
                dst: NodeId(client),
                size: size.sample(&mut sizes),
                class,
                arrival: at,
                twin_of: None,
            });
        }
    }
    Ok(finalize(flows))
}

/// Builds the trace a workload config describes.
pub fn generate(
    cfg: &WorkloadConfig,
    topo: &Topology,
    duration: SimTime,
    seed: u64,
    base_dir: Option<&Path>,
) -> Result<Vec<FlowSpec>, WorkloadError> {
    match cfg {
        WorkloadConfig::Das { size, load, client } => {
            gen_das(topo, duration, &size.resolve(base_dir)?, *load, *client, seed)
        }
        WorkloadConfig::Sjf { size, load, long_threshold, max_size } => {
            let mut dist = size.resolve(base_dir)?;
            if let (Some(cap), SizeDistribution::Empirical(c)) = (max_size, &dist) {
                dist = SizeDistribution::Empirical(c.truncated(*cap as f64));
            }
            gen_sjf(topo, duration, &dist, *load, *long_threshold, seed)
        }
        WorkloadConfig::OnOff { workers, update_size, hp_load, lp_size, lp_load, parameter_server } => gen_onoff(
            topo,
            duration,
            *workers,
            *update_size,
            *hp_load,
            &lp_size.resolve(base_dir)?,
            *lp_load,
            *parameter_server,
            seed,
        ),
        WorkloadConfig::Hybrid { size, hp_load, lp_load, total_load, client } => {
            gen_hybrid(topo, duration, &size.resolve(base_dir)?, *hp_load, *lp_load, *total_load, *client, seed)
        }
    }
}
