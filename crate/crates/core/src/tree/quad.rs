//! Randomly translated quadtree with lazily materialized children.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    bounding_box, longest_side, scheduled_weight, NodeId, OctantCode, QuadCell, SpatialTree,
    TreeBuildConfig, TreeFamily, TreeNode,
};
use crate::distributions::PointStore;
use crate::error::{invalid, Result};

fn octant(x: &[f64], lo: &[f64], half: f64) -> OctantCode {
    let mut words = vec![0u64; x.len().div_ceil(64)];
    for (k, (&v, &l)) in x.iter().zip(lo).enumerate() {
        if v >= l + half {
            words[k / 64] |= 1 << (k % 64);
        }
    }
    OctantCode(words)
}

fn all_identical(store: &PointStore, pts: &[usize]) -> bool {
    let first = store.row(pts[0]);
    pts[1..].iter().all(|&p| store.row(p) == first)
}

/// Builds a quadtree over every point of `store`.
///
/// The root cell is a hypercube of side `2Φ` (with `Φ` the longest
/// bounding-box side) whose lower corner is the bounding-box minimum minus a
/// per-axis uniform offset in `[0, Φ)`, so every point stays inside. Each
/// split halves the cell along every axis; only occupied octants become
/// children, keyed and ordered by their octant code. Levels where all points
/// fall into a single octant are passed through without creating a node, so
/// every internal node has at least two children and every node keeps the
/// split count of its real level.
pub fn build_quadtree(store: &PointStore, cfg: &TreeBuildConfig) -> Result<SpatialTree> {
    build_with_shift(store, cfg, None)
}

/// `shift` overrides the random per-axis origin offsets.
pub(crate) fn build_with_shift(
    store: &PointStore,
    cfg: &TreeBuildConfig,
    shift: Option<&[f64]>,
) -> Result<SpatialTree> {
    if cfg.family != TreeFamily::Quad {
        return invalid("build_quadtree requires family = quad");
    }
    cfg.validate()?;
    let d = store.dim();
    let (lo, hi) = bounding_box(store);
    let side = longest_side(&lo, &hi);
    let phi = if side > 0.0 { side } else { 1.0 };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let origin: Vec<f64> = match shift {
        Some(s) => lo.iter().zip(s).map(|(&l, &o)| l - o).collect(),
        None => lo.iter().map(|&l| l - rng.random_range(0.0..phi)).collect(),
    };

    let mut root = TreeNode::new(None, 0.0, 0);
    root.cell = Some(QuadCell { lo: origin, side: 2.0 * phi });
    let mut nodes = vec![root];
    let mut stack: Vec<(NodeId, Vec<usize>)> = vec![(0, (0..store.len()).collect())];

    while let Some((id, pts)) = stack.pop() {
        if pts.len() <= 1
            || nodes[id].split_count >= cfg.depth_limit
            || all_identical(store, &pts)
        {
            let mut pts = pts;
            pts.sort_unstable();
            nodes[id].points = pts;
            continue;
        }

        let cell = nodes[id].cell.clone().expect("quadtree nodes carry cells");
        let mut cell_lo = cell.lo;
        let mut cell_side = cell.side;
        let mut level = nodes[id].split_count;
        let groups = loop {
            let half = cell_side / 2.0;
            let mut groups: BTreeMap<OctantCode, Vec<usize>> = BTreeMap::new();
            for &p in &pts {
                groups.entry(octant(store.row(p), &cell_lo, half)).or_default().push(p);
            }
            level += 1;
            if groups.len() > 1 {
                break Some((groups, half));
            }
            // Single occupied octant: descend without materializing a node.
            let (code, _) = groups.into_iter().next().expect("nonempty");
            let before = cell_lo.clone();
            for (k, l) in cell_lo.iter_mut().enumerate() {
                if code.bit(k) {
                    *l += half;
                }
            }
            cell_side = half;
            let stalled = before == cell_lo && code.0.iter().any(|&w| w != 0);
            if level >= cfg.depth_limit || stalled || cell_side == 0.0 {
                break None;
            }
        };

        let Some((groups, half)) = groups else {
            let mut pts = pts;
            pts.sort_unstable();
            nodes[id].points = pts;
            continue;
        };

        let weight = scheduled_weight(TreeFamily::Quad, phi, d, level);
        let mut created = Vec::with_capacity(groups.len());
        for (code, members) in groups {
            let child_lo: Vec<f64> = cell_lo
                .iter()
                .enumerate()
                .map(|(k, &l)| if code.bit(k) { l + half } else { l })
                .collect();
            let child_id = nodes.len();
            let mut child = TreeNode::new(Some(id), weight, level);
            child.cell = Some(QuadCell { lo: child_lo, side: half });
            child.octant = Some(code);
            nodes.push(child);
            nodes[id].children.push(child_id);
            created.push((child_id, members));
        }
        // Low codes are processed first.
        for entry in created.into_iter().rev() {
            stack.push(entry);
        }
    }

    let mut point_to_leaf = vec![0; store.len()];
    for (id, node) in nodes.iter().enumerate() {
        for &p in &node.points {
            point_to_leaf[p] = id;
        }
    }
    Ok(SpatialTree { config: *cfg, dim: d, phi, nodes, point_to_leaf })
}
