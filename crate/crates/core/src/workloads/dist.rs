use std::path::Path;

use serde::{Deserialize, Serialize};

use super::WorkloadError;
use crate::rng::RngStream;

const BUILTINS: &[(&str, &str)] = &[
    ("websearch", include_str!("../../data/websearch.cdf")),
    ("datamining", include_str!("../../data/datamining.cdf")),
    ("storage", include_str!("../../data/storage.cdf")),
];

/// Piecewise-linear empirical CDF over flow sizes.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalCdf {
    points: Vec<(f64, f64)>,
}

impl EmpiricalCdf {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, WorkloadError> {
        let bad = |why: &str| Err(WorkloadError::BadCdf(why.to_string()));
        if points.is_empty() {
            return bad("no points");
        }
        for w in points.windows(2) {
            if w[1].0 < w[0].0 || w[1].1 < w[0].1 {
                return bad("points must be ascending in size and probability");
            }
        }
        for &(s, p) in &points {
            if !(s >= 1.0) || !(0.0..=1.0).contains(&p) {
                return bad("sizes must be at least 1 byte and probabilities in [0, 1]");
            }
        }
        if (points[points.len() - 1].1 - 1.0).abs() > 1e-9 {
            return bad("final probability must be 1.0");
        }
        Ok(EmpiricalCdf { points })
    }

    /// One `<size_bytes> <cumulative_probability>` pair per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, WorkloadError> {
        let mut points = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let parsed = (|| {
                let s: f64 = it.next()?.parse().ok()?;
                let p: f64 = it.next()?.parse().ok()?;
                it.next().is_none().then_some((s, p))
            })();
            match parsed {
                Some(pt) => points.push(pt),
                None => return Err(WorkloadError::BadCdf(format!("line {}: {raw:?}", n + 1))),
            }
        }
        Self::new(points)
    }

    pub fn builtin(name: &str) -> Option<Self> {
        BUILTINS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Self::parse(text).expect("builtin CDF is well formed"))
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Inverse transform of `u` in [0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        let i = self.points.partition_point(|&(_, p)| p < u);
        if i == 0 {
            return self.points[0].0;
        }
        if i >= self.points.len() {
            return self.points[self.points.len() - 1].0;
        }
        let (s0, p0) = self.points[i - 1];
        let (s1, p1) = self.points[i];
        if p1 <= p0 {
            return s1;
        }
        s0 + (s1 - s0) * (u - p0) / (p1 - p0)
    }

    /// Cumulative probability at `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        let i = self.points.partition_point(|&(s, _)| s <= x);
        if i == 0 {
            return 0.0;
        }
        if i >= self.points.len() {
            return 1.0;
        }
        let (s0, p0) = self.points[i - 1];
        let (s1, p1) = self.points[i];
        p0 + (p1 - p0) * (x - s0) / (s1 - s0)
    }

    pub fn mean(&self) -> f64 {
        let first = self.points[0];
        let mut m = first.0 * first.1;
        for w in self.points.windows(2) {
            m += (w[1].1 - w[0].1) * (w[0].0 + w[1].0) / 2.0;
        }
        m
    }

    /// The same distribution with sizes above `cap` folded onto `cap`.
    pub fn truncated(&self, cap: f64) -> Self {
        let mut points = Vec::new();
        for (i, &(s, p)) in self.points.iter().enumerate() {
            if s <= cap {
                points.push((s, p));
                continue;
            }
            if i > 0 {
                let (s0, p0) = self.points[i - 1];
                if s0 < cap {
                    let pc = p0 + (p - p0) * (cap - s0) / (s - s0);
                    points.push((cap, pc));
                }
            }
            points.push((cap, 1.0));
            break;
        }
        EmpiricalCdf { points }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SizeDistribution {
    /// Uniform over `[1, 2 * mean]`.
    Uniform {
        mean: u64,
    },
    Fixed(u64),
    Empirical(EmpiricalCdf),
}

impl SizeDistribution {
    pub fn mean(&self) -> f64 {
        match self {
            SizeDistribution::Uniform { mean } => (1.0 + 2.0 * *mean as f64) / 2.0,
            SizeDistribution::Fixed(s) => *s as f64,
            SizeDistribution::Empirical(c) => c.mean(),
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> u64 {
        match self {
            SizeDistribution::Uniform { mean } => 1 + rng.index(2 * *mean as usize) as u64,
            SizeDistribution::Fixed(s) => *s,
            SizeDistribution::Empirical(c) => (c.quantile(rng.uniform()).round() as u64).max(1),
        }
    }
}

/// Flow-size section of a workload config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum SizeSpec {
    Uniform(u64),
    Fixed(u64),
    /// `builtin:<name>` or a path to a CDF file.
    Cdf(String),
}

impl SizeSpec {
    /// Relative CDF paths resolve against `base_dir`.
    pub fn resolve(&self, base_dir: Option<&Path>) -> Result<SizeDistribution, WorkloadError> {
        match self {
            SizeSpec::Uniform(0) | SizeSpec::Fixed(0) => Err(WorkloadError::ZeroSize),
            SizeSpec::Uniform(m) => Ok(SizeDistribution::Uniform { mean: *m }),
            SizeSpec::Fixed(s) => Ok(SizeDistribution::Fixed(*s)),
            SizeSpec::Cdf(src) => {
                if let Some(name) = src.strip_prefix("builtin:") {
                    return EmpiricalCdf::builtin(name)
                        .map(SizeDistribution::Empirical)
                        .ok_or_else(|| WorkloadError::UnknownBuiltin(name.to_string()));
                }
                let path = match base_dir {
                    Some(d) if Path::new(src).is_relative() => d.join(src),
                    _ => Path::new(src).to_path_buf(),
                };
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| WorkloadError::CdfFile { path: path.display().to_string(), reason: e.to_string() })?;
                EmpiricalCdf::parse(&text).map(SizeDistribution::Empirical)
            }
        }
    }
}
