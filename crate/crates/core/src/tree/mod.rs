//! Randomized space-partitioning trees over a [`PointStore`].
//!
//! Both families share one node layout. Every node records its parent, the
//! weight of the edge to that parent, and the number of splits between it and
//! the root. Points live only in leaves.
//!
//! Edge weights follow a geometric schedule anchored at `Φ`:
//!
//! * kd-tree: `Φ` is half the longest bounding-box side and the node produced
//!   by the zero-based split `t` on its root path weighs `Φ · 2^(-⌊t/D⌋)`, so
//!   `D` kd splits count as one halving of every side.
//! * quadtree: `Φ` is the longest bounding-box side, the root cell has side
//!   `2Φ`, and a node `s` levels below the root weighs `Φ · 2^(-s)`, half the
//!   side of its own cell.
//!
//! With these conventions the first-level edges of both families weigh half
//! the longest bounding-box side.

use serde::{Deserialize, Serialize};

use crate::distributions::PointStore;
use crate::error::{invalid, Result};

mod kd;
mod quad;
mod serialize;

pub use kd::build_kdtree;
pub use quad::build_quadtree;
pub use serialize::{read_tree, write_tree, TREE_MAGIC};

/// Node index inside a [`SpatialTree`].
pub type NodeId = usize;

/// Default kd shift amplitude.
pub const DEFAULT_ETA: f64 = 0.25;
/// Default depth limit; large enough to never bind in practice.
pub const DEFAULT_DEPTH_LIMIT: u32 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeFamily {
    Kd,
    Quad,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeBuildConfig {
    pub family: TreeFamily,
    /// kd split shift amplitude relative to the cell width, in `[0, 0.5)`.
    pub eta: f64,
    /// Maximum number of splits on any root-to-leaf path.
    pub depth_limit: u32,
    pub seed: u64,
}

impl TreeBuildConfig {
    pub fn kd(seed: u64) -> Self {
        Self { family: TreeFamily::Kd, eta: DEFAULT_ETA, depth_limit: DEFAULT_DEPTH_LIMIT, seed }
    }

    pub fn quad(seed: u64) -> Self {
        Self { family: TreeFamily::Quad, ..Self::kd(seed) }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_depth_limit(mut self, depth_limit: u32) -> Self {
        self.depth_limit = depth_limit;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.eta) {
            return invalid(format!("eta must lie in [0, 0.5), got {}", self.eta));
        }
        if self.depth_limit == 0 {
            return invalid("depth_limit must be at least 1");
        }
        Ok(())
    }
}

/// Octant of a quadtree child inside its parent cell: bit `k` is set when the
/// child lies in the upper half along axis `k`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OctantCode(pub Vec<u64>);

impl OctantCode {
    pub fn bit(&self, axis: usize) -> bool {
        self.0[axis / 64] >> (axis % 64) & 1 == 1
    }
}

/// Axis-aligned hypercube `[lo, lo + side)` of a quadtree node.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadCell {
    pub lo: Vec<f64>,
    pub side: f64,
}

impl QuadCell {
    pub fn contains(&self, x: &[f64]) -> bool {
        self.lo
            .iter()
            .zip(x)
            .all(|(&lo, &v)| v >= lo && v <= lo + self.side)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub parent: Option<NodeId>,
    /// Weight of the edge to `parent`; zero for the root.
    pub edge_weight: f64,
    /// Number of splits between the root and this node.
    pub split_count: u32,
    pub children: Vec<NodeId>,
    /// Points assigned to this node; nonempty exactly on leaves.
    pub points: Vec<usize>,
    /// Quadtree only: octant of this node inside the cell that was split to create it.
    pub octant: Option<OctantCode>,
    /// Quadtree only: the node's cell.
    pub cell: Option<QuadCell>,
}

impl TreeNode {
    pub(crate) fn new(parent: Option<NodeId>, edge_weight: f64, split_count: u32) -> Self {
        Self {
            parent,
            edge_weight,
            split_count,
            children: Vec::new(),
            points: Vec::new(),
            octant: None,
            cell: None,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// A kd-tree or quadtree over every point of a store.
///
/// Children always carry larger node ids than their parent, so iterating ids
/// in decreasing order visits the tree bottom-up.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialTree {
    pub(crate) config: TreeBuildConfig,
    pub(crate) dim: usize,
    pub(crate) phi: f64,
    pub(crate) nodes: Vec<TreeNode>,
    pub(crate) point_to_leaf: Vec<NodeId>,
}

impl SpatialTree {
    pub fn config(&self) -> &TreeBuildConfig {
        &self.config
    }

    pub fn family(&self) -> TreeFamily {
        self.config.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of points the tree was built over.
    pub fn point_count(&self) -> usize {
        self.point_to_leaf.len()
    }

    pub fn leaf_of(&self, point: usize) -> Result<NodeId> {
        match self.point_to_leaf.get(point) {
            Some(&leaf) => Ok(leaf),
            None => invalid(format!(
                "point {point} is not in the tree ({} points)",
                self.point_to_leaf.len()
            )),
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.is_leaf())
            .map(|(id, _)| id)
    }

    /// Edge weight the schedule assigns to a node `split_count` splits below the root.
    pub fn scheduled_weight(&self, split_count: u32) -> f64 {
        scheduled_weight(self.config.family, self.phi, self.dim, split_count)
    }

    pub(crate) fn check_node(&self, id: NodeId) -> Result<()> {
        if id >= self.nodes.len() {
            return invalid(format!("node {id} out of range (tree has {})", self.nodes.len()));
        }
        Ok(())
    }
}

pub(crate) fn scheduled_weight(family: TreeFamily, phi: f64, dim: usize, split_count: u32) -> f64 {
    if split_count == 0 {
        return 0.0;
    }
    let halvings = match family {
        TreeFamily::Kd => (split_count as usize - 1) / dim,
        TreeFamily::Quad => split_count as usize,
    };
    phi * 0.5f64.powi(halvings as i32)
}

/// Builds the tree family selected by `cfg.family`.
pub fn build_tree(store: &PointStore, cfg: &TreeBuildConfig) -> Result<SpatialTree> {
    match cfg.family {
        TreeFamily::Kd => build_kdtree(store, cfg),
        TreeFamily::Quad => build_quadtree(store, cfg),
    }
}

/// Sum of edge weights on the unique path between nodes `a` and `b`.
pub fn tree_distance(tree: &SpatialTree, a: NodeId, b: NodeId) -> Result<f64> {
    tree.check_node(a)?;
    tree.check_node(b)?;
    let (mut a, mut b) = (a, b);
    let mut total = 0.0;
    // Ancestors have strictly smaller split counts, so always lift the deeper side.
    while a != b {
        let (na, nb) = (&tree.nodes[a], &tree.nodes[b]);
        if na.split_count >= nb.split_count {
            total += na.edge_weight;
            a = na.parent.expect("non-root node has a parent");
        } else {
            total += nb.edge_weight;
            b = nb.parent.expect("non-root node has a parent");
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeDepthStats {
    pub max_splits: u32,
    pub mean_leaf_splits: f64,
    pub leaf_count: usize,
}

pub fn tree_depth_stats(tree: &SpatialTree) -> TreeDepthStats {
    let mut max_splits = 0;
    let mut total = 0u64;
    let mut leaf_count = 0;
    for id in tree.leaves() {
        let s = tree.nodes[id].split_count;
        max_splits = max_splits.max(s);
        total += s as u64;
        leaf_count += 1;
    }
    TreeDepthStats {
        max_splits,
        mean_leaf_splits: total as f64 / leaf_count as f64,
        leaf_count,
    }
}

/// Longest side of the axis-aligned bounding box, with per-axis minima.
pub(crate) fn bounding_box(store: &PointStore) -> (Vec<f64>, Vec<f64>) {
    let mut lo = store.row(0).to_vec();
    let mut hi = lo.clone();
    for i in 1..store.len() {
        for (k, &v) in store.row(i).iter().enumerate() {
            if v < lo[k] {
                lo[k] = v;
            }
            if v > hi[k] {
                hi[k] = v;
            }
        }
    }
    (lo, hi)
}

pub(crate) fn longest_side(lo: &[f64], hi: &[f64]) -> f64 {
    lo.iter().zip(hi).map(|(l, h)| h - l).fold(0.0, f64::max)
}
