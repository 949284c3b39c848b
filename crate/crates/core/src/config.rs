//! Benchmark run configuration, stored as TOML.
//!
//! Every key is optional and unknown keys are rejected:
//!
//! ```toml
//! methods = ["exact", "flowtree", "kd-flowtree", "sinkhorn", "greedy1d-r"]
//! seeds = [0, 1, 2, 3, 4]
//! metric = "l1"
//! eta = 0.25
//! depth_limit = 1048576
//! depth_limits = [2, 5, 8, 10, 20, 50]
//! reg = 0.1
//! max_iter = 10
//! r_grid = [0.01, 0.05, 0.1]
//! queries = "holdout:0.1"
//! split_seed = 0
//! repetitions = 3
//! exact_max_support = 2000
//! ```

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::exact::DEFAULT_MAX_SUPPORT;
use crate::baselines::{ExactConfig, SinkhornConfig};
use crate::distributions::GroundMetric;
use crate::error::{invalid, Error, Result};
use crate::retrieval::{default_r_grid, BenchOptions, MethodSpec};
use crate::tree::{TreeBuildConfig, DEFAULT_DEPTH_LIMIT, DEFAULT_ETA};

/// Method names as used on the command line and in config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodKind {
    Exact,
    Sinkhorn,
    Flowtree,
    KdFlowtree,
    #[serde(rename = "greedy1d-r")]
    Greedy1dR,
}

impl MethodKind {
    pub const ALL: [MethodKind; 5] =
        [MethodKind::Exact, MethodKind::Sinkhorn, MethodKind::Flowtree, MethodKind::KdFlowtree, MethodKind::Greedy1dR];

    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Exact => "exact",
            MethodKind::Sinkhorn => "sinkhorn",
            MethodKind::Flowtree => "flowtree",
            MethodKind::KdFlowtree => "kd-flowtree",
            MethodKind::Greedy1dR => "greedy1d-r",
        }
    }

    pub fn is_seeded(self) -> bool {
        matches!(self, MethodKind::Flowtree | MethodKind::KdFlowtree | MethodKind::Greedy1dR)
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match MethodKind::ALL.iter().find(|k| k.name() == s) {
            Some(&k) => Ok(k),
            None => invalid(format!(
                "unknown method {s:?}; expected one of exact, sinkhorn, flowtree, kd-flowtree, greedy1d-r"
            )),
        }
    }
}

/// Where benchmark queries come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum QuerySpec {
    /// Hold out this fraction of the dataset as queries.
    Holdout(f64),
    /// Read queries from a distributions file over the same points.
    File(PathBuf),
}

impl Default for QuerySpec {
    fn default() -> Self {
        QuerySpec::Holdout(0.1)
    }
}

impl FromStr for QuerySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(frac) = s.strip_prefix("holdout:") {
            match frac.parse::<f64>() {
                Ok(f) if f > 0.0 && f < 1.0 => Ok(QuerySpec::Holdout(f)),
                _ => invalid(format!("holdout fraction must lie in (0, 1), got {frac:?}")),
            }
        } else if let Some(path) = s.strip_prefix("file:") {
            if path.is_empty() {
                return invalid("empty query file path");
            }
            Ok(QuerySpec::File(PathBuf::from(path)))
        } else {
            invalid(format!("query spec must be holdout:<frac> or file:<path>, got {s:?}"))
        }
    }
}

impl TryFrom<String> for QuerySpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<QuerySpec> for String {
    fn from(q: QuerySpec) -> String {
        match q {
            QuerySpec::Holdout(f) => format!("holdout:{f}"),
            QuerySpec::File(p) => format!("file:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub methods: Vec<MethodKind>,
    /// Seeded methods run once per seed.
    pub seeds: Vec<u64>,
    pub metric: GroundMetric,
    pub eta: f64,
    pub depth_limit: u32,
    /// Limits used by the depth sweep.
    pub depth_limits: Vec<u32>,
    pub reg: f64,
    pub max_iter: usize,
    pub r_grid: Vec<f64>,
    pub queries: QuerySpec,
    /// Seed of the holdout shuffle.
    pub split_seed: u64,
    pub repetitions: usize,
    pub exact_max_support: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sinkhorn = SinkhornConfig::default();
        Self {
            methods: vec![MethodKind::Exact, MethodKind::Flowtree, MethodKind::KdFlowtree],
            seeds: vec![0],
            metric: GroundMetric::L1,
            eta: DEFAULT_ETA,
            depth_limit: DEFAULT_DEPTH_LIMIT,
            depth_limits: vec![2, 5, 8, 10, 20, 50],
            reg: sinkhorn.reg,
            max_iter: sinkhorn.max_iter,
            r_grid: default_r_grid(),
            queries: QuerySpec::default(),
            split_seed: 0,
            repetitions: 3,
            exact_max_support: DEFAULT_MAX_SUPPORT,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map_or(0, |s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config is always serializable")
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return invalid("no methods configured");
        }
        if self.seeds.is_empty() && self.methods.iter().any(|m| m.is_seeded()) {
            return invalid("seeded methods need at least one seed");
        }
        for spec in self.method_specs() {
            spec.validate()?;
        }
        if self.depth_limits.contains(&0) {
            return invalid("depth limits must be positive");
        }
        self.bench_options().validate()
    }

    pub fn sinkhorn(&self) -> SinkhornConfig {
        SinkhornConfig { reg: self.reg, max_iter: self.max_iter }
    }

    pub fn tree(&self, kind: MethodKind, seed: u64) -> TreeBuildConfig {
        let base = if kind == MethodKind::KdFlowtree { TreeBuildConfig::kd(seed) } else { TreeBuildConfig::quad(seed) };
        base.with_eta(self.eta).with_depth_limit(self.depth_limit)
    }

    /// One spec per unseeded method and one per (seeded method, seed).
    pub fn method_specs(&self) -> Vec<MethodSpec> {
        let mut out = Vec::new();
        for &kind in &self.methods {
            match kind {
                MethodKind::Exact => out.push(MethodSpec::Exact),
                MethodKind::Sinkhorn => out.push(MethodSpec::Sinkhorn(self.sinkhorn())),
                _ => out.extend(self.seeds.iter().map(|&s| self.seeded_spec(kind, s))),
            }
        }
        out
    }

    fn seeded_spec(&self, kind: MethodKind, seed: u64) -> MethodSpec {
        match kind {
            MethodKind::Flowtree => MethodSpec::FlowtreeQuad(self.tree(kind, seed)),
            MethodKind::KdFlowtree => MethodSpec::FlowtreeKd(self.tree(kind, seed)),
            _ => MethodSpec::OneGreedyR { seed },
        }
    }

    pub fn bench_options(&self) -> BenchOptions {
        BenchOptions {
            metric: self.metric,
            r_grid: self.r_grid.clone(),
            repetitions: self.repetitions,
            exact: ExactConfig { max_support: self.exact_max_support },
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}
