//! Versioned little-endian binary encoding of a [`SpatialTree`].
//!
//! Layout:
//!
//! ```text
//! "OTTREE1"
//! u8 family (0 = kd, 1 = quad) | f64 eta | u32 depth_limit | u64 seed
//! u32 dim | f64 phi | u32 point_count | u32 node_count
//! per node:
//!   u32 parent (u32::MAX = root) | f64 edge_weight | u32 split_count
//!   u32 n_children, u32 children[n_children]
//!   u32 n_points, u32 points[n_points]
//!   u8 has_octant [u32 n_words, u64 words[n_words]]
//!   u8 has_cell [f64 side, f64 lo[dim]]
//! u32 point_to_leaf[point_count]
//! ```

use super::{NodeId, OctantCode, QuadCell, SpatialTree, TreeBuildConfig, TreeFamily, TreeNode};
use crate::error::{Error, Result};

pub const TREE_MAGIC: &[u8; 7] = b"OTTREE1";

const ROOT_SENTINEL: u32 = u32::MAX;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: usize) {
        let v = u32::try_from(v).expect("tree sizes fit in u32");
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn write_tree(tree: &SpatialTree) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(TREE_MAGIC);
    w.u8(match tree.config.family {
        TreeFamily::Kd => 0,
        TreeFamily::Quad => 1,
    });
    w.f64(tree.config.eta);
    w.u32(tree.config.depth_limit as usize);
    w.u64(tree.config.seed);
    w.u32(tree.dim);
    w.f64(tree.phi);
    w.u32(tree.point_to_leaf.len());
    w.u32(tree.nodes.len());
    for node in &tree.nodes {
        match node.parent {
            Some(p) => w.u32(p),
            None => w.0.extend_from_slice(&ROOT_SENTINEL.to_le_bytes()),
        }
        w.f64(node.edge_weight);
        w.u32(node.split_count as usize);
        w.u32(node.children.len());
        for &c in &node.children {
            w.u32(c);
        }
        w.u32(node.points.len());
        for &p in &node.points {
            w.u32(p);
        }
        match &node.octant {
            Some(code) => {
                w.u8(1);
                w.u32(code.0.len());
                for &word in &code.0 {
                    w.u64(word);
                }
            }
            None => w.u8(0),
        }
        match &node.cell {
            Some(cell) => {
                w.u8(1);
                w.f64(cell.side);
                for &v in &cell.lo {
                    w.f64(v);
                }
            }
            None => w.u8(0),
        }
    }
    for &leaf in &tree.point_to_leaf {
        w.u32(leaf);
    }
    w.0
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Format(format!("tree blob truncated at byte {}", self.pos)));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn len(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn corrupt<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Format(msg.into()))
}

pub fn read_tree(bytes: &[u8]) -> Result<SpatialTree> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(TREE_MAGIC.len())? != TREE_MAGIC {
        return corrupt("missing OTTREE1 magic");
    }
    let family = match r.u8()? {
        0 => TreeFamily::Kd,
        1 => TreeFamily::Quad,
        other => return corrupt(format!("unknown tree family tag {other}")),
    };
    let eta = r.f64()?;
    let depth_limit = r.u32()?;
    let seed = r.u64()?;
    let config = TreeBuildConfig { family, eta, depth_limit, seed };
    config.validate().map_err(|e| Error::Format(e.to_string()))?;
    let dim = r.len()?;
    let phi = r.f64()?;
    let point_count = r.len()?;
    let node_count = r.len()?;
    if dim == 0 || node_count == 0 {
        return corrupt("tree blob has zero dimension or no nodes");
    }

    let mut nodes = Vec::with_capacity(node_count.min(bytes.len()));
    for id in 0..node_count {
        let parent = match r.u32()? {
            ROOT_SENTINEL => None,
            p if (p as usize) < id => Some(p as NodeId),
            p => return corrupt(format!("node {id} has invalid parent {p}")),
        };
        if (parent.is_none()) != (id == 0) {
            return corrupt("exactly node 0 must be the root");
        }
        let edge_weight = r.f64()?;
        let split_count = r.u32()?;
        let mut node = TreeNode::new(parent, edge_weight, split_count);
        let n_children = r.len()?;
        for _ in 0..n_children {
            let c = r.len()?;
            if c <= id || c >= node_count {
                return corrupt(format!("node {id} has invalid child {c}"));
            }
            node.children.push(c);
        }
        let n_points = r.len()?;
        for _ in 0..n_points {
            let p = r.len()?;
            if p >= point_count {
                return corrupt(format!("node {id} holds invalid point {p}"));
            }
            node.points.push(p);
        }
        if r.u8()? == 1 {
            let n_words = r.len()?;
            let words = (0..n_words).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
            node.octant = Some(OctantCode(words));
        }
        if r.u8()? == 1 {
            let side = r.f64()?;
            let lo = (0..dim).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            node.cell = Some(QuadCell { lo, side });
        }
        nodes.push(node);
    }
    let mut point_to_leaf = Vec::with_capacity(point_count.min(bytes.len()));
    for p in 0..point_count {
        let leaf = r.len()?;
        if leaf >= node_count || !nodes[leaf].points.contains(&p) {
            return corrupt(format!("point {p} maps to node {leaf} which does not hold it"));
        }
        point_to_leaf.push(leaf);
    }
    if r.pos != bytes.len() {
        return corrupt(format!("{} trailing bytes after tree", bytes.len() - r.pos));
    }
    Ok(SpatialTree { config, dim, phi, nodes, point_to_leaf })
}
