//! Randomized kd-tree: random axis, shifted median split.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{bounding_box, longest_side, scheduled_weight, NodeId, SpatialTree, TreeBuildConfig, TreeFamily, TreeNode};
use crate::distributions::PointStore;
use crate::error::{invalid, Result};

const LEFT_SALT: u64 = 0x243f_6a88_85a3_08d3;
const RIGHT_SALT: u64 = 0x1319_8a2e_0370_7344;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Split chosen at an internal node; kept only during construction to recover cell widths.
#[derive(Clone, Copy)]
struct Split {
    axis: usize,
    value: f64,
}

struct Builder<'a> {
    store: &'a PointStore,
    cfg: &'a TreeBuildConfig,
    root_lo: Vec<f64>,
    root_hi: Vec<f64>,
    phi: f64,
    nodes: Vec<TreeNode>,
    splits: Vec<Option<Split>>,
    is_right: Vec<bool>,
}

impl Builder<'_> {
    /// Width of the node's cell along `axis`, from the nearest ancestor cuts on that axis.
    fn cell_width(&self, node: NodeId, axis: usize) -> f64 {
        let (mut lo, mut hi) = (None, None);
        let mut cur = node;
        while let Some(p) = self.nodes[cur].parent {
            if let Some(split) = self.splits[p] {
                if split.axis == axis {
                    if self.is_right[cur] {
                        lo.get_or_insert(split.value);
                    } else {
                        hi.get_or_insert(split.value);
                    }
                    if lo.is_some() && hi.is_some() {
                        break;
                    }
                }
            }
            cur = p;
        }
        hi.unwrap_or(self.root_hi[axis]) - lo.unwrap_or(self.root_lo[axis])
    }

    fn push_child(&mut self, parent: NodeId, right: bool) -> NodeId {
        let t = self.nodes[parent].split_count;
        let weight = scheduled_weight(TreeFamily::Kd, self.phi, self.store.dim(), t + 1);
        let id = self.nodes.len();
        self.nodes.push(TreeNode::new(Some(parent), weight, t + 1));
        self.splits.push(None);
        self.is_right.push(right);
        self.nodes[parent].children.push(id);
        id
    }

    /// Draws axes until one separates the points, up to `D` attempts.
    fn draw_axis(&self, rng: &mut ChaCha8Rng, perm: &[usize]) -> Option<(usize, f64, f64)> {
        let d = self.store.dim();
        for _ in 0..d {
            let axis = rng.random_range(0..d);
            let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
            for &p in perm {
                let v = self.store.row(p)[axis];
                min = min.min(v);
                max = max.max(v);
            }
            if min < max {
                return Some((axis, min, max));
            }
        }
        None
    }

    fn make_leaf(&mut self, node: NodeId, perm: &[usize]) {
        let mut pts = perm.to_vec();
        pts.sort_unstable();
        self.nodes[node].points = pts;
    }

    fn build(mut self) -> SpatialTree {
        let n = self.store.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut stack: Vec<(NodeId, u64, usize, usize)> = vec![(0, mix(self.cfg.seed), 0, n)];

        while let Some((node, path, start, end)) = stack.pop() {
            let count = end - start;
            if count <= 1 || self.nodes[node].split_count >= self.cfg.depth_limit {
                self.make_leaf(node, &perm[start..end]);
                continue;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(path);
            let Some((axis, min, max)) = self.draw_axis(&mut rng, &perm[start..end]) else {
                self.make_leaf(node, &perm[start..end]);
                continue;
            };

            let store = self.store;
            let slice = &mut perm[start..end];
            let key = |p: &usize| store.row(*p)[axis];
            let mid = count / 2;
            slice.select_nth_unstable_by(mid, |a, b| key(a).total_cmp(&key(b)));
            let median = key(&slice[mid]);

            let width = self.cell_width(node, axis);
            let u: f64 = rng.random();
            let mut cut = median + (2.0 * u - 1.0) * self.cfg.eta * width;
            if cut <= min {
                // Left side would be empty: cut just above the smallest value.
                cut = slice
                    .iter()
                    .map(key)
                    .filter(|&v| v > min)
                    .fold(f64::INFINITY, f64::min);
            } else if cut > max {
                cut = max;
            }

            let mut left = 0;
            for i in 0..slice.len() {
                if key(&slice[i]) < cut {
                    slice.swap(i, left);
                    left += 1;
                }
            }
            debug_assert!(left > 0 && left < count);

            self.splits[node] = Some(Split { axis, value: cut });
            let l = self.push_child(node, false);
            let r = self.push_child(node, true);
            stack.push((r, mix(path ^ RIGHT_SALT), start + left, end));
            stack.push((l, mix(path ^ LEFT_SALT), start, start + left));
        }

        let mut point_to_leaf = vec![0; n];
        for (id, node) in self.nodes.iter().enumerate() {
            for &p in &node.points {
                point_to_leaf[p] = id;
            }
        }
        SpatialTree {
            config: *self.cfg,
            dim: self.store.dim(),
            phi: self.phi,
            nodes: self.nodes,
            point_to_leaf,
        }
    }
}

/// Builds a kd-tree over every point of `store`.
///
/// At each cell a split axis is drawn uniformly, the cut is placed at the
/// lower median (sorted index `⌊n/2⌋`) plus a uniform shift in
/// `[-η·L, η·L]` where `L` is the cell width on that axis, and points with
/// coordinate `>= cut` go right. If the shifted cut would leave one side
/// empty it is clamped back inside the occupied range. If no axis separates
/// the points after `D` draws, the cell becomes a leaf.
///
/// Every cell draws from its own generator, keyed by the seed and the
/// left/right path from the root. A depth-limited tree is therefore the
/// unlimited tree with its deeper cells merged into leaves.
pub fn build_kdtree(store: &PointStore, cfg: &TreeBuildConfig) -> Result<SpatialTree> {
    if cfg.family != TreeFamily::Kd {
        return invalid("build_kdtree requires family = kd");
    }
    cfg.validate()?;
    let (root_lo, root_hi) = bounding_box(store);
    let side = longest_side(&root_lo, &root_hi);
    let phi = if side > 0.0 { side / 2.0 } else { 1.0 };
    let builder = Builder {
        store,
        cfg,
        root_lo,
        root_hi,
        phi,
        nodes: vec![TreeNode::new(None, 0.0, 0)],
        splits: vec![None],
        is_right: vec![false],
    };
    Ok(builder.build())
}
