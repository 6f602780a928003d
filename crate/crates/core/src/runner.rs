//! Single runs, paired runs against the oracle baseline, and parameter sweeps.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, Protocol, ScenarioConfig};
use crate::metrics::{self, normalize_paired, MetricsError, PairedResult, RunSummary};
use crate::network::{simulate, SimError};
use crate::par;
use crate::workloads::{generate, FlowSpec, WorkloadError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("workload: {0}")]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("sweep: {0}")]
    Sweep(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.display().to_string(), source }
}

/// The flow trace a config and seed produce; CDF paths resolve against `base_dir`.
pub fn trace(cfg: &ScenarioConfig, seed: u64, base_dir: Option<&Path>) -> Result<Vec<FlowSpec>, RunError> {
    cfg.validate()?;
    Ok(generate(&cfg.workload, &cfg.topology.topology(), cfg.duration(), seed, base_dir)?)
}

pub fn simulate_seed(cfg: &ScenarioConfig, seed: u64, base_dir: Option<&Path>) -> Result<RunSummary, RunError> {
    let t = trace(cfg, seed, base_dir)?;
    Ok(simulate(cfg, &t, seed)?)
}

/// `cfg` with every low-priority class switched to the oracle transport.
pub fn baseline_config(cfg: &ScenarioConfig) -> ScenarioConfig {
    let mut b = cfg.clone();
    for t in b.transports.iter_mut().skip(1) {
        t.protocol = Protocol::NearOpt;
    }
    b
}

pub struct PairedRun {
    pub candidate: RunSummary,
    pub baseline: RunSummary,
    pub paired: PairedResult,
}

/// Runs the candidate and the oracle baseline over one shared trace.
pub fn simulate_paired(cfg: &ScenarioConfig, seed: u64, base_dir: Option<&Path>) -> Result<PairedRun, RunError> {
    let t = trace(cfg, seed, base_dir)?;
    let base_cfg = baseline_config(cfg);
    let candidate = simulate(cfg, &t, seed)?;
    let baseline = simulate(&base_cfg, &t, seed)?;
    let paired = normalize_paired(&candidate, &baseline)?;
    Ok(PairedRun { candidate, baseline, paired })
}

fn emit_single(dir: &Path, s: &RunSummary) -> Result<Vec<PathBuf>, RunError> {
    let mut files = vec![metrics::write_flows_csv(dir, s)?];
    files.extend(metrics::write_summary(dir, s, None)?);
    Ok(files)
}

/// Runs once and writes the flow CSV, summary and CDFs into `out`.
pub fn run(cfg: &ScenarioConfig, seed: u64, out: &Path, base_dir: Option<&Path>) -> Result<Vec<PathBuf>, RunError> {
    let s = simulate_seed(cfg, seed, base_dir)?;
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    emit_single(out, &s)
}

pub fn run_paired(
    cfg: &ScenarioConfig,
    seed: u64,
    out: &Path,
    base_dir: Option<&Path>,
) -> Result<Vec<PathBuf>, RunError> {
    let r = simulate_paired(cfg, seed, base_dir)?;
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    let mut files = vec![metrics::write_flows_csv(out, &r.candidate)?];
    files.extend(metrics::write_summary(out, &r.candidate, Some(&r.paired))?);
    files.push(metrics::write_flows_csv(out, &r.baseline)?);
    files.extend(metrics::write_summary(out, &r.baseline, None)?);
    let stem = metrics::output_stem(&r.candidate.scenario, &r.candidate.transport, seed);
    let p = out.join(format!("{stem}.paired.csv"));
    metrics::write_paired_csv(&p, &r.paired)?;
    files.push(p);
    Ok(files)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    #[default]
    Single,
    Paired,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    /// Dotted path into the normalized base config.
    pub key: String,
    pub values: Vec<toml::Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BaseRef {
    Path(String),
    Inline(Box<ScenarioConfig>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Path to a scenario file (relative to the spec) or an inline scenario table.
    pub base: BaseRef,
    #[serde(default)]
    pub mode: SweepMode,
    /// Overrides the base config's seeds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub axes: Vec<Axis>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub id: usize,
    pub overrides: Vec<(String, toml::Value)>,
    pub config: ScenarioConfig,
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Config(ConfigError::Parse(e)))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| RunError::Config(ConfigError::Io { path: path.display().to_string(), source }))?;
        Self::parse(&text)
    }

    pub fn base_config(&self, spec_dir: Option<&Path>) -> Result<ScenarioConfig, RunError> {
        match &self.base {
            BaseRef::Inline(c) => Ok((**c).clone()),
            BaseRef::Path(p) => {
                let path = match spec_dir {
                    Some(d) if Path::new(p).is_relative() => d.join(p),
                    _ => PathBuf::from(p),
                };
                Ok(ScenarioConfig::load(&path)?)
            }
        }
    }

    /// Cartesian product of the axes, first axis varying slowest.
    pub fn expand(&self, spec_dir: Option<&Path>) -> Result<Vec<GridPoint>, RunError> {
        let mut base = self.base_config(spec_dir)?;
        if let Some(seeds) = &self.seeds {
            base.seeds = seeds.clone();
        }
        for a in &self.axes {
            if a.values.is_empty() {
                return Err(RunError::Sweep(format!("axis {} has no values", a.key)));
            }
        }
        let mut points = vec![(Vec::new(), base)];
        for a in &self.axes {
            let mut next = Vec::with_capacity(points.len() * a.values.len());
            for (ov, cfg) in &points {
                for v in &a.values {
                    let c = cfg.with_override(&a.key, v)?;
                    let mut o: Vec<(String, toml::Value)> = ov.clone();
                    o.push((a.key.clone(), v.clone()));
                    next.push((o, c));
                }
            }
            points = next;
        }
        let mut out = Vec::with_capacity(points.len());
        for (id, (overrides, config)) in points.into_iter().enumerate() {
            config.validate()?;
            out.push(GridPoint { id, overrides, config });
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub point: usize,
    pub seed: u64,
    /// `key = value` per override.
    pub overrides: Vec<String>,
    /// Relative to the sweep output directory.
    pub files: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepIndex {
    pub runs: Vec<IndexEntry>,
}

pub const INDEX_FILE: &str = "index.toml";

/// One run (or paired run) per grid point per seed; writes `index.toml` into `out`.
pub fn sweep(spec: &SweepSpec, out: &Path, spec_dir: Option<&Path>) -> Result<SweepIndex, RunError> {
    let points = spec.expand(spec_dir)?;
    let base_dir = match &spec.base {
        BaseRef::Path(p) => {
            let p = match spec_dir {
                Some(d) if Path::new(p).is_relative() => d.join(p),
                _ => PathBuf::from(p),
            };
            p.parent().map(Path::to_path_buf)
        }
        BaseRef::Inline(_) => spec_dir.map(Path::to_path_buf),
    };
    let jobs: Vec<(usize, u64)> = points.iter().flat_map(|p| p.config.seeds.iter().map(move |&s| (p.id, s))).collect();
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    let results = par::map(&jobs, |&(id, seed)| {
        let point = &points[id];
        let dir = out.join(format!("point{id:03}"));
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let files = match spec.mode {
            SweepMode::Single => run(&point.config, seed, &dir, base_dir.as_deref())?,
            SweepMode::Paired => run_paired(&point.config, seed, &dir, base_dir.as_deref())?,
        };
        let rel = files.iter().map(|f| f.strip_prefix(out).unwrap_or(f).display().to_string()).collect();
        Ok::<_, RunError>(IndexEntry {
            point: id,
            seed,
            overrides: point.overrides.iter().map(|(k, v)| format!("{k} = {v}")).collect(),
            files: rel,
        })
    });
    let mut index = SweepIndex::default();
    for r in results {
        index.runs.push(r?);
    }
    let path = out.join(INDEX_FILE);
    let body = toml::to_string(&index).expect("index serializes");
    std::fs::write(&path, body).map_err(io_err(&path))?;
    Ok(index)
}
