//! `ot-retrieve`: dataset statistics, pairwise distances, tree building and
//! Recall@k benchmarks over discrete distributions.
//!
//! Exit codes: 0 success, 1 I/O or numerical failure, 2 usage or parse
//! error, 3 exact-solver capacity exceeded.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ot_retrieve::config::{MethodKind, QuerySpec};
use ot_retrieve::GroundMetric;

#[derive(Parser)]
#[command(name = "ot-retrieve", version, about = "Approximate Wasserstein nearest-neighbor retrieval")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print dataset size, mean support size and dimension as JSON.
    Stats(DatasetArgs),
    /// Print the distance between distributions I and J.
    Dist {
        #[command(flatten)]
        data: DatasetArgs,
        i: usize,
        j: usize,
        #[arg(long, value_enum, default_value = "exact")]
        method: MethodArg,
        #[command(flatten)]
        params: MethodParams,
    },
    /// Run the Recall@k benchmark and write `<prefix>.recall.csv` and `<prefix>.report.json`.
    Bench(BenchArgs),
    /// Benchmark the tree methods at several depth limits, one report pair per limit.
    SweepDepth {
        #[command(flatten)]
        bench: BenchArgs,
        /// Comma-separated depth limits; overrides the config file.
        #[arg(long, value_delimiter = ',')]
        limits: Option<Vec<u32>>,
    },
    /// Build a tree over the points file and write it in binary form.
    BuildTree {
        points: PathBuf,
        #[arg(long, value_enum, default_value = "kd-flowtree")]
        method: TreeMethodArg,
        #[command(flatten)]
        params: MethodParams,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct DatasetArgs {
    /// Points file (OTPTS1 binary).
    points: PathBuf,
    /// Distributions file (text).
    dists: PathBuf,
}

#[derive(Args, Default)]
struct MethodParams {
    #[arg(long, value_enum)]
    metric: Option<MetricArg>,
    /// kd split shift amplitude.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    depth_limit: Option<u32>,
    /// Sinkhorn regularization.
    #[arg(long)]
    reg: Option<f64>,
    /// Sinkhorn iterations.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Seed for randomized methods; repeat or comma-separate for several.
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DatasetArgs,
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Methods to run; repeat or comma-separate.
    #[arg(long, value_enum, value_delimiter = ',')]
    method: Vec<MethodArg>,
    #[command(flatten)]
    params: MethodParams,
    /// `holdout:<frac>` or `file:<path>`.
    #[arg(long)]
    queries: Option<String>,
    /// Comma-separated ratios k / |dataset| in (0, 1].
    #[arg(long, value_delimiter = ',')]
    r_grid: Option<Vec<f64>>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    out_prefix: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Exact,
    Sinkhorn,
    Flowtree,
    KdFlowtree,
    #[value(name = "greedy1d-r")]
    Greedy1dR,
}

impl From<MethodArg> for MethodKind {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Exact => MethodKind::Exact,
            MethodArg::Sinkhorn => MethodKind::Sinkhorn,
            MethodArg::Flowtree => MethodKind::Flowtree,
            MethodArg::KdFlowtree => MethodKind::KdFlowtree,
            MethodArg::Greedy1dR => MethodKind::Greedy1dR,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TreeMethodArg {
    Flowtree,
    KdFlowtree,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    L1,
    L2,
}

impl From<MetricArg> for GroundMetric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::L1 => GroundMetric::L1,
            MetricArg::L2 => GroundMetric::L2,
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("OT_RETRIEVE_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| ot_retrieve::Error::InvalidArgument(format!("OT_RETRIEVE_THREADS={v:?} is not a count")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Stats(d) => commands::stats(&d.points, &d.dists),
        Command::Dist { data, i, j, method, params } => {
            commands::dist(&data.points, &data.dists, i, j, method.into(), &params)
        }
        Command::Bench(b) => commands::bench(&b),
        Command::SweepDepth { bench, limits } => commands::sweep_depth(&bench, limits),
        Command::BuildTree { points, method, params, out } => {
            let kind = match method {
                TreeMethodArg::Flowtree => MethodKind::Flowtree,
                TreeMethodArg::KdFlowtree => MethodKind::KdFlowtree,
            };
            commands::build_tree(&points, kind, &params, &out)
        }
    }
}

/// Maps the innermost library error to the exit-code contract.
fn exit_code(err: &anyhow::Error) -> u8 {
    use ot_retrieve::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e.root() {
                E::Capacity { .. } => 3,
                E::InvalidArgument(_) | E::Parse { .. } | E::Format(_) => 2,
                _ => 1,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

impl BenchArgs {
    fn query_spec(&self) -> anyhow::Result<Option<QuerySpec>> {
        Ok(match &self.queries {
            Some(q) => Some(q.parse()?),
            None => None,
        })
    }
}
