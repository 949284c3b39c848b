//! Nearest-neighbor ranking, Recall@k against the exact oracle, and the
//! benchmark / depth-sweep harness.
//!
//! Queries are evaluated in parallel; every shared structure (store, tree,
//! line embedding) is read-only and results are collected in query order, so
//! reports do not depend on scheduling.

use std::cmp::Ordering;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    exact_wasserstein_with, one_greedy_distance, project_to_line_random, sinkhorn_cost, ExactConfig,
    LineEmbedding, SinkhornConfig,
};
use crate::distributions::{stats_of, Dataset, DatasetStats, DiscreteDistribution, GroundMetric, PointStore};
use crate::error::{invalid, Error, Result};
use crate::flowtree::flowtree_distance;
use crate::tree::{build_tree, SpatialTree, TreeBuildConfig, TreeFamily};

/// One distance method together with its configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MethodSpec {
    Exact,
    Sinkhorn(SinkhornConfig),
    /// Flowtree on a randomly shifted quadtree.
    FlowtreeQuad(TreeBuildConfig),
    /// Flowtree on a randomized kd-tree.
    FlowtreeKd(TreeBuildConfig),
    /// 1-Greedy on a random projection to a line.
    OneGreedyR { seed: u64 },
}

impl MethodSpec {
    /// Command-line name of the method.
    pub fn name(&self) -> &'static str {
        match self {
            MethodSpec::Exact => "exact",
            MethodSpec::Sinkhorn(_) => "sinkhorn",
            MethodSpec::FlowtreeQuad(_) => "flowtree",
            MethodSpec::FlowtreeKd(_) => "kd-flowtree",
            MethodSpec::OneGreedyR { .. } => "greedy1d-r",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            MethodSpec::Exact | MethodSpec::Sinkhorn(_) => None,
            MethodSpec::FlowtreeQuad(c) | MethodSpec::FlowtreeKd(c) => Some(c.seed),
            MethodSpec::OneGreedyR { seed } => Some(*seed),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MethodSpec::Exact | MethodSpec::OneGreedyR { .. } => Ok(()),
            MethodSpec::Sinkhorn(c) => c.validate(),
            MethodSpec::FlowtreeQuad(c) => check_family(c, TreeFamily::Quad),
            MethodSpec::FlowtreeKd(c) => check_family(c, TreeFamily::Kd),
        }
    }

    fn tag(&self, e: Error) -> Error {
        Error::Method { method: self.name().to_string(), inner: Box::new(e) }
    }
}

fn check_family(cfg: &TreeBuildConfig, want: TreeFamily) -> Result<()> {
    if cfg.family != want {
        return invalid(format!("tree family {:?} does not match the method", cfg.family));
    }
    cfg.validate()
}

/// Preprocessing state shared by all queries of one method.
#[derive(Debug, Clone)]
pub enum Prepared {
    None,
    Tree(SpatialTree),
    Line(LineEmbedding),
}

/// Builds the tree or line embedding a method needs.
pub fn prepare(method: &MethodSpec, store: &PointStore) -> Result<Prepared> {
    method.validate()?;
    Ok(match method {
        MethodSpec::Exact | MethodSpec::Sinkhorn(_) => Prepared::None,
        MethodSpec::FlowtreeQuad(c) | MethodSpec::FlowtreeKd(c) => Prepared::Tree(build_tree(store, c)?),
        MethodSpec::OneGreedyR { seed } => Prepared::Line(project_to_line_random(store, *seed)),
    })
}

fn check_prepared(method: &MethodSpec, prepared: &Prepared, store: &PointStore) -> Result<()> {
    let ok = match (method, prepared) {
        (MethodSpec::Exact | MethodSpec::Sinkhorn(_), Prepared::None) => true,
        (MethodSpec::FlowtreeQuad(c) | MethodSpec::FlowtreeKd(c), Prepared::Tree(t)) => {
            t.config() == c && t.dim() == store.dim() && t.point_count() == store.len()
        }
        (MethodSpec::OneGreedyR { seed }, Prepared::Line(l)) => {
            l.seed() == Some(*seed) && l.coords().len() == store.len()
        }
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        invalid(format!("preprocessing state does not match method {}", method.name()))
    }
}

/// Distance between two distributions under a prepared method.
pub fn method_distance(
    method: &MethodSpec,
    prepared: &Prepared,
    store: &PointStore,
    metric: GroundMetric,
    exact: &ExactConfig,
    mu: &DiscreteDistribution,
    nu: &DiscreteDistribution,
) -> Result<f64> {
    match (method, prepared) {
        (MethodSpec::Exact, _) => Ok(exact_wasserstein_with(mu, nu, store, metric, exact)?.cost),
        (MethodSpec::Sinkhorn(c), _) => sinkhorn_cost(mu, nu, store, metric, c),
        (_, Prepared::Tree(t)) => flowtree_distance(t, mu, nu, store, metric),
        (_, Prepared::Line(l)) => one_greedy_distance(mu, nu, l, store, metric),
        _ => invalid(format!("preprocessing state does not match method {}", method.name())),
    }
}

/// Database ranking for one query, ascending by score then by index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedResult {
    pub query: usize,
    pub ranking: Vec<(usize, f64)>,
}

impl RankedResult {
    /// Sorts `(index, score)` pairs into ranking order.
    pub fn from_scores(query: usize, mut ranking: Vec<(usize, f64)>) -> Self {
        ranking.sort_by(|a, b| rank_order(a, b));
        Self { query, ranking }
    }

    /// Zero-based rank of a database item.
    pub fn position_of(&self, item: usize) -> Option<usize> {
        self.ranking.iter().position(|&(i, _)| i == item)
    }
}

fn rank_order(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))
}

/// Knobs shared by every method of a benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    pub metric: GroundMetric,
    pub r_grid: Vec<f64>,
    /// Timing repetitions; reported times are medians.
    pub repetitions: usize,
    /// Capacity of the exact solver, for the oracle and the `exact` method.
    pub exact: ExactConfig,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            metric: GroundMetric::L1,
            r_grid: default_r_grid(),
            repetitions: 3,
            exact: ExactConfig::default(),
        }
    }
}

impl BenchOptions {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return invalid("repetitions must be at least 1");
        }
        if self.r_grid.is_empty() {
            return invalid("r grid is empty");
        }
        if let Some(r) = self.r_grid.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
            return invalid(format!("r values must lie in (0, 1], got {r}"));
        }
        Ok(())
    }
}

/// `{0.01, 0.02, ..., 1.00}`.
pub fn default_r_grid() -> Vec<f64> {
    (1..=100).map(|i| i as f64 / 100.0).collect()
}

/// `k = ⌈r · n⌉` clamped to `[1, n]`; the slack absorbs products like `0.07 · 100`.
pub fn k_for_ratio(r: f64, n: usize) -> usize {
    ((r * n as f64 - 1e-9).ceil() as usize).clamp(1, n)
}

/// Scores every database item against `query`.
///
/// `prebuilt` must match `method` when given; otherwise the state is built here.
pub fn rank_database(
    query_index: usize,
    query: &DiscreteDistribution,
    ds: &Dataset,
    method: &MethodSpec,
    metric: GroundMetric,
    prebuilt: Option<&Prepared>,
) -> Result<RankedResult> {
    let owned;
    let prepared = match prebuilt {
        Some(p) => {
            check_prepared(method, p, ds.store())?;
            p
        }
        None => {
            owned = prepare(method, ds.store())?;
            &owned
        }
    };
    rank_prepared(query_index, query, ds, method, prepared, metric, &ExactConfig::default())
}

fn rank_prepared(
    query_index: usize,
    query: &DiscreteDistribution,
    ds: &Dataset,
    method: &MethodSpec,
    prepared: &Prepared,
    metric: GroundMetric,
    exact: &ExactConfig,
) -> Result<RankedResult> {
    let store = ds.store();
    let scores = ds
        .items()
        .iter()
        .enumerate()
        .map(|(i, item)| Ok((i, method_distance(method, prepared, store, metric, exact, query, item)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(RankedResult::from_scores(query_index, scores))
}

/// Whether the exact nearest neighbor is among the first `k` ranked items.
pub fn hit_at_k(approx: &RankedResult, exact_nn: usize, k: usize) -> Result<bool> {
    if k == 0 || k > approx.ranking.len() {
        return invalid(format!("k = {k} outside [1, {}]", approx.ranking.len()));
    }
    Ok(approx.ranking[..k].iter().any(|&(i, _)| i == exact_nn))
}

/// Fraction of queries whose exact nearest neighbor appears in the top `k`.
pub fn recall_at_k(approx: &[RankedResult], exact_nn: &[usize], k: usize) -> Result<f64> {
    if approx.is_empty() || approx.len() != exact_nn.len() {
        return invalid("need one exact neighbor per ranked query");
    }
    let mut hits = 0usize;
    for (a, &nn) in approx.iter().zip(exact_nn) {
        hits += hit_at_k(a, nn, k)? as usize;
    }
    Ok(hits as f64 / approx.len() as f64)
}

/// Exact 1-NN of every query under W₁, ties to the lowest database index.
pub fn exact_nearest(
    ds: &Dataset,
    queries: &[DiscreteDistribution],
    metric: GroundMetric,
    exact: &ExactConfig,
) -> Result<Vec<usize>> {
    if ds.is_empty() || queries.is_empty() {
        return invalid("oracle needs a nonempty database and query list");
    }
    queries
        .par_iter()
        .enumerate()
        .map(|(q, query)| {
            let r = rank_prepared(q, query, ds, &MethodSpec::Exact, &Prepared::None, metric, exact)?;
            Ok(r.ranking[0].0)
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::Method { method: "oracle".into(), inner: Box::new(e) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecallPoint {
    pub r: f64,
    pub k: usize,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    pub spec: MethodSpec,
    pub curve: Vec<RecallPoint>,
    pub time_total_seconds: f64,
    pub time_query_only_seconds: f64,
    pub time_preprocess_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchMetadata {
    pub dataset: DatasetStats,
    pub dim: usize,
    pub queries: usize,
    pub metric: GroundMetric,
    pub seeds: Vec<u64>,
    pub repetitions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub metadata: BenchMetadata,
    pub methods: Vec<MethodReport>,
}

impl BenchReport {
    /// Recall curves averaged over every spec sharing a method name, in
    /// order of first appearance.
    pub fn mean_curves(&self) -> Vec<(String, Vec<(f64, f64)>)> {
        let mut out: Vec<(String, Vec<(f64, f64)>, usize)> = Vec::new();
        for m in &self.methods {
            let slot = match out.iter().position(|(name, _, _)| *name == m.method) {
                Some(p) => p,
                None => {
                    out.push((m.method.clone(), m.curve.iter().map(|p| (p.r, 0.0)).collect(), 0));
                    out.len() - 1
                }
            };
            let (_, curve, count) = &mut out[slot];
            for (acc, p) in curve.iter_mut().zip(&m.curve) {
                acc.1 += p.recall;
            }
            *count += 1;
        }
        out.into_iter()
            .map(|(name, curve, count)| {
                (name, curve.into_iter().map(|(r, s)| (r, s / count as f64)).collect())
            })
            .collect()
    }

    /// Mean recall of `method` at ratio `r`, if present.
    pub fn mean_recall(&self, method: &str, r: f64) -> Option<f64> {
        let curves = self.mean_curves();
        let (_, curve) = curves.iter().find(|(name, _)| name == method)?;
        curve.iter().find(|(x, _)| (x - r).abs() < 1e-12).map(|&(_, y)| y)
    }

    /// The report with every wall-clock field zeroed.
    pub fn without_timings(&self) -> BenchReport {
        let mut r = self.clone();
        for m in &mut r.methods {
            m.time_total_seconds = 0.0;
            m.time_query_only_seconds = 0.0;
            m.time_preprocess_seconds = 0.0;
        }
        r
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Runs the exact oracle once, then evaluates every method.
pub fn run_benchmark(
    ds: &Dataset,
    queries: &[DiscreteDistribution],
    methods: &[MethodSpec],
    opts: &BenchOptions,
) -> Result<BenchReport> {
    opts.validate()?;
    let nn = exact_nearest(ds, queries, opts.metric, &opts.exact)?;
    run_benchmark_with_oracle(ds, queries, &nn, methods, opts)
}

/// As [`run_benchmark`], with precomputed exact nearest neighbors.
pub fn run_benchmark_with_oracle(
    ds: &Dataset,
    queries: &[DiscreteDistribution],
    exact_nn: &[usize],
    methods: &[MethodSpec],
    opts: &BenchOptions,
) -> Result<BenchReport> {
    opts.validate()?;
    if queries.is_empty() || exact_nn.len() != queries.len() {
        return invalid("need a nonempty query list with one exact neighbor per query");
    }
    if let Some(&bad) = exact_nn.iter().find(|&&i| i >= ds.len()) {
        return invalid(format!("exact neighbor {bad} outside the database"));
    }
    for q in queries {
        q.check_in(ds.store())?;
    }
    let reports = methods
        .iter()
        .map(|m| evaluate_method(ds, queries, exact_nn, m, opts).map_err(|e| m.tag(e)))
        .collect::<Result<Vec<_>>>()?;
    let mut seeds: Vec<u64> = methods.iter().filter_map(MethodSpec::seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    Ok(BenchReport {
        metadata: BenchMetadata {
            dataset: stats_of(ds.items())?,
            dim: ds.store().dim(),
            queries: queries.len(),
            metric: opts.metric,
            seeds,
            repetitions: opts.repetitions,
        },
        methods: reports,
    })
}

fn evaluate_method(
    ds: &Dataset,
    queries: &[DiscreteDistribution],
    exact_nn: &[usize],
    method: &MethodSpec,
    opts: &BenchOptions,
) -> Result<MethodReport> {
    let mut pre_times = Vec::with_capacity(opts.repetitions);
    let mut query_times = Vec::with_capacity(opts.repetitions);
    let mut ranked = Vec::new();
    for rep in 0..opts.repetitions {
        let start = Instant::now();
        let prepared = prepare(method, ds.store())?;
        let built = Instant::now();
        let results = queries
            .par_iter()
            .enumerate()
            .map(|(q, query)| rank_prepared(q, query, ds, method, &prepared, opts.metric, &opts.exact))
            .collect::<Result<Vec<_>>>()?;
        let done = Instant::now();
        pre_times.push((built - start).as_secs_f64());
        query_times.push((done - built).as_secs_f64());
        if rep == 0 {
            ranked = results;
        }
    }
    let n = ds.len();
    let curve = opts
        .r_grid
        .iter()
        .map(|&r| {
            let k = k_for_ratio(r, n);
            Ok(RecallPoint { r, k, recall: recall_at_k(&ranked, exact_nn, k)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let pre = median(pre_times);
    let query = median(query_times);
    Ok(MethodReport {
        method: method.name().to_string(),
        spec: *method,
        curve,
        time_total_seconds: pre + query,
        time_query_only_seconds: query,
        time_preprocess_seconds: pre,
    })
}

/// Rebuilds every tree method at each depth limit and benchmarks it.
///
/// Non-tree methods in `base` are rejected. The exact oracle runs once.
pub fn depth_sweep(
    ds: &Dataset,
    queries: &[DiscreteDistribution],
    limits: &[u32],
    base: &[MethodSpec],
    opts: &BenchOptions,
) -> Result<Vec<(u32, BenchReport)>> {
    check_sweep(limits, base)?;
    opts.validate()?;
    let nn = exact_nearest(ds, queries, opts.metric, &opts.exact)?;
    depth_sweep_with_oracle(ds, queries, &nn, limits, base, opts)
}

fn check_sweep(limits: &[u32], base: &[MethodSpec]) -> Result<()> {
    if limits.is_empty() || limits.contains(&0) {
        return invalid("depth limits must be a nonempty list of positive integers");
    }
    if let Some(m) = base.iter().find(|m| !matches!(m, MethodSpec::FlowtreeQuad(_) | MethodSpec::FlowtreeKd(_))) {
        return invalid(format!("depth sweep only applies to tree methods, got {}", m.name()));
    }
    Ok(())
}

/// As [`depth_sweep`], with precomputed exact nearest neighbors.
pub fn depth_sweep_with_oracle(
    ds: &Dataset,
    queries: &[DiscreteDistribution],
    exact_nn: &[usize],
    limits: &[u32],
    base: &[MethodSpec],
    opts: &BenchOptions,
) -> Result<Vec<(u32, BenchReport)>> {
    check_sweep(limits, base)?;
    limits
        .iter()
        .map(|&limit| {
            let methods: Vec<MethodSpec> = base.iter().map(|m| with_depth_limit(m, limit)).collect();
            Ok((limit, run_benchmark_with_oracle(ds, queries, exact_nn, &methods, opts)?))
        })
        .collect()
}

fn with_depth_limit(m: &MethodSpec, limit: u32) -> MethodSpec {
    match *m {
        MethodSpec::FlowtreeQuad(c) => MethodSpec::FlowtreeQuad(c.with_depth_limit(limit)),
        MethodSpec::FlowtreeKd(c) => MethodSpec::FlowtreeKd(c.with_depth_limit(limit)),
        other => other,
    }
}
