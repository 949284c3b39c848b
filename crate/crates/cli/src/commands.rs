use std::path::Path;

use anyhow::{bail, Context, Result};
use log::info;
use ot_retrieve::baselines::ExactConfig;
use ot_retrieve::config::{MethodKind, QuerySpec, RunConfig};
use ot_retrieve::io::{load_dataset, read_distributions_file, read_points_file, write_tree_file};
use ot_retrieve::retrieval::{depth_sweep, method_distance, prepare, run_benchmark, MethodSpec};
use ot_retrieve::tree::tree_depth_stats;
use ot_retrieve::{build_tree as build, dataset_stats, Dataset, DiscreteDistribution, Error};
use serde_json::json;

use crate::output::{format_distance, write_report_pair};
use crate::{BenchArgs, MethodParams};

fn load(points: &Path, dists: &Path) -> Result<Dataset> {
    load_dataset(points, dists).with_context(|| format!("loading {} and {}", points.display(), dists.display()))
}

pub fn stats(points: &Path, dists: &Path) -> Result<()> {
    let ds = load(points, dists)?;
    let s = dataset_stats(&ds)?;
    println!("{}", json!({ "size": s.size, "avg_support": s.avg_support, "dim": ds.store().dim() }));
    Ok(())
}

fn apply_params(cfg: &mut RunConfig, p: &MethodParams) {
    if let Some(m) = p.metric {
        cfg.metric = m.into();
    }
    if let Some(v) = p.eta {
        cfg.eta = v;
    }
    if let Some(v) = p.depth_limit {
        cfg.depth_limit = v;
    }
    if let Some(v) = p.reg {
        cfg.reg = v;
    }
    if let Some(v) = p.max_iter {
        cfg.max_iter = v;
    }
    if !p.seed.is_empty() {
        cfg.seeds = p.seed.clone();
    }
}

fn single_spec(cfg: &RunConfig, kind: MethodKind) -> Result<MethodSpec> {
    let cfg = RunConfig { methods: vec![kind], seeds: cfg.seeds[..1.min(cfg.seeds.len())].to_vec(), ..cfg.clone() };
    cfg.validate()?;
    Ok(cfg.method_specs()[0])
}

pub fn dist(points: &Path, dists: &Path, i: usize, j: usize, kind: MethodKind, p: &MethodParams) -> Result<()> {
    let ds = load(points, dists)?;
    for idx in [i, j] {
        if idx >= ds.len() {
            return Err(Error::InvalidArgument(format!("distribution {idx} out of range ({} loaded)", ds.len())).into());
        }
    }
    let mut cfg = RunConfig::default();
    apply_params(&mut cfg, p);
    let spec = single_spec(&cfg, kind)?;
    let prepared = prepare(&spec, ds.store())?;
    let exact = ExactConfig { max_support: cfg.exact_max_support };
    let d = method_distance(&spec, &prepared, ds.store(), cfg.metric, &exact, &ds.items()[i], &ds.items()[j])?;
    println!("{}", format_distance(d));
    Ok(())
}

fn bench_config(b: &BenchArgs) -> Result<RunConfig> {
    let mut cfg = match &b.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            RunConfig::from_toml(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if !b.method.is_empty() {
        cfg.methods = b.method.iter().map(|&m| m.into()).collect();
    }
    apply_params(&mut cfg, &b.params);
    if let Some(q) = b.query_spec()? {
        cfg.queries = q;
    }
    if let Some(r) = &b.r_grid {
        cfg.r_grid = r.clone();
    }
    if let Some(n) = b.repetitions {
        cfg.repetitions = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn split(ds: Dataset, cfg: &RunConfig) -> Result<(Dataset, Vec<DiscreteDistribution>)> {
    Ok(match &cfg.queries {
        QuerySpec::Holdout(frac) => ds.split_holdout(*frac, cfg.split_seed)?,
        QuerySpec::File(path) => {
            let q = read_distributions_file(path, ds.store().len())
                .with_context(|| format!("reading queries from {}", path.display()))?;
            if q.is_empty() {
                bail!(Error::InvalidArgument(format!("no queries in {}", path.display())));
            }
            (ds, q)
        }
    })
}

pub fn bench(b: &BenchArgs) -> Result<()> {
    let cfg = bench_config(b)?;
    let (db, queries) = split(load(&b.data.points, &b.data.dists)?, &cfg)?;
    info!("benchmarking {} queries against {} items", queries.len(), db.len());
    let report = run_benchmark(&db, &queries, &cfg.method_specs(), &cfg.bench_options())?;
    write_report_pair(&b.out_prefix, &cfg, &report, None)
}

pub fn sweep_depth(b: &BenchArgs, limits: Option<Vec<u32>>) -> Result<()> {
    let mut cfg = bench_config(b)?;
    if let Some(l) = limits {
        cfg.depth_limits = l;
    }
    cfg.methods.retain(|m| matches!(m, MethodKind::Flowtree | MethodKind::KdFlowtree));
    if cfg.methods.is_empty() {
        cfg.methods = vec![MethodKind::Flowtree, MethodKind::KdFlowtree];
    }
    cfg.validate()?;
    let (db, queries) = split(load(&b.data.points, &b.data.dists)?, &cfg)?;
    let sweep = depth_sweep(&db, &queries, &cfg.depth_limits, &cfg.method_specs(), &cfg.bench_options())?;
    for (limit, report) in &sweep {
        let prefix = format!("{}.depth{limit}", b.out_prefix.display());
        write_report_pair(Path::new(&prefix), &cfg, report, Some(*limit))?;
    }
    Ok(())
}

pub fn build_tree(points: &Path, kind: MethodKind, p: &MethodParams, out: &Path) -> Result<()> {
    let store = read_points_file(points).with_context(|| format!("loading {}", points.display()))?;
    let mut cfg = RunConfig::default();
    apply_params(&mut cfg, p);
    let seed = cfg.seeds.first().copied().unwrap_or(0);
    let tree = build(&store, &cfg.tree(kind, seed))?;
    write_tree_file(out, &tree).with_context(|| format!("writing {}", out.display()))?;
    let s = tree_depth_stats(&tree);
    println!(
        "{}",
        json!({ "nodes": tree.len(), "leaves": s.leaf_count, "max_splits": s.max_splits,
                "mean_leaf_splits": s.mean_leaf_splits, "phi": tree.phi() })
    );
    Ok(())
}
