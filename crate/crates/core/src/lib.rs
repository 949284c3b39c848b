//! Approximate 1-Wasserstein nearest-neighbor retrieval over discrete distributions.
//!
//! The central estimator embeds the point vocabulary into a randomized tree
//! (a shifted-median kd-tree or a randomly translated quadtree), computes the
//! transport plan that is optimal for the tree metric with a single bottom-up
//! greedy pass, and prices that plan with the ground metric. Exact transport,
//! Sinkhorn and a random-projection 1-D greedy method are provided as
//! baselines, together with a Recall@k benchmark harness.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`distributions`] | point stores, ground metrics, distributions, datasets |
//! | [`tree`] | kd-tree / quadtree construction, tree metric, serialization |
//! | [`flowtree`] | tree-optimal matching, tree-Wasserstein, Flowtree distance |
//! | [`baselines`] | exact OT, Sinkhorn, 1-D exact OT, 1-Greedy |
//! | [`retrieval`] | ranking, Recall@k, benchmark and depth sweep |
//! | [`io`] | points / distributions file formats |
//! | [`config`] | run configuration |

pub mod baselines;
pub mod config;
pub mod distributions;
pub mod error;
pub mod flowtree;
pub mod io;
pub mod retrieval;
pub mod synthetic;
pub mod tree;

pub use distributions::{
    dataset_stats, ground_distance, uniform_distribution, Dataset, DatasetStats,
    DiscreteDistribution, GroundMetric, PointStore,
};
pub use error::{Error, Result};
pub use flowtree::{flowtree_distance, flowtree_matching, tree_wasserstein, FlowMatching};
pub use tree::{build_kdtree, build_quadtree, build_tree, SpatialTree, TreeBuildConfig, TreeFamily};
