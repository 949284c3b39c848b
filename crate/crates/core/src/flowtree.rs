//! Tree-optimal matching, tree-Wasserstein distance and the Flowtree estimate.
//!
//! Unmatched mass is pushed from the support leaves toward the root. At each
//! node the pending `μ` and `ν` entries are paired greedily; whatever cannot
//! be paired moves to the parent. Pairing mass as low as possible is optimal
//! for the tree metric, and the resulting plan, priced with the ground
//! metric, gives the Flowtree estimate.

use std::collections::BTreeMap;

use crate::distributions::{DiscreteDistribution, GroundMetric, PointStore};
use crate::error::{invalid, Result};
use crate::tree::{NodeId, SpatialTree};

/// Remaining mass below this is treated as exhausted.
pub const MASS_EPS: f64 = 1e-12;

/// Sparse transport plan between the supports of two distributions.
///
/// `(i, j, mass)` moves `mass` from the `i`-th support point of the source
/// to the `j`-th support point of the target.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowMatching {
    pub entries: Vec<(usize, usize, f64)>,
}

impl FlowMatching {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest absolute deviation of the row / column sums from `mu` / `nu`.
    pub fn marginal_error(&self, mu: &[f64], nu: &[f64]) -> f64 {
        let mut rows = vec![0.0; mu.len()];
        let mut cols = vec![0.0; nu.len()];
        for &(i, j, m) in &self.entries {
            rows[i] += m;
            cols[j] += m;
        }
        rows.iter()
            .zip(mu)
            .chain(cols.iter().zip(nu))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `Σ mass · cost(i, j)`.
    pub fn cost_by(&self, mut cost: impl FnMut(usize, usize) -> f64) -> f64 {
        self.entries.iter().map(|&(i, j, m)| m * cost(i, j)).sum()
    }

    /// Prices the plan with the ground metric.
    pub fn ground_cost(
        &self,
        mu: &DiscreteDistribution,
        nu: &DiscreteDistribution,
        store: &PointStore,
        metric: GroundMetric,
    ) -> f64 {
        let (su, sv) = (mu.support(), nu.support());
        self.cost_by(|i, j| metric.distance(store.row(su[i]), store.row(sv[j])))
    }

    /// Prices the plan with the tree metric between the leaves of the support points.
    pub fn tree_cost(
        &self,
        tree: &SpatialTree,
        mu: &DiscreteDistribution,
        nu: &DiscreteDistribution,
    ) -> Result<f64> {
        let mut total = 0.0;
        for &(i, j, m) in &self.entries {
            let a = tree.leaf_of(mu.support()[i])?;
            let b = tree.leaf_of(nu.support()[j])?;
            total += m * crate::tree::tree_distance(tree, a, b)?;
        }
        Ok(total)
    }

    pub fn transposed(&self) -> FlowMatching {
        FlowMatching { entries: self.entries.iter().map(|&(i, j, m)| (j, i, m)).collect() }
    }
}

#[derive(Default)]
struct Pending {
    mu: Vec<(usize, f64)>,
    nu: Vec<(usize, f64)>,
}

/// Loads each support point's mass onto its leaf, keyed by node id.
fn seed_leaves(
    tree: &SpatialTree,
    mu: &DiscreteDistribution,
    nu: &DiscreteDistribution,
) -> Result<BTreeMap<NodeId, Pending>> {
    let mut pending: BTreeMap<NodeId, Pending> = BTreeMap::new();
    for (i, (&p, &w)) in mu.support().iter().zip(mu.weights()).enumerate() {
        let leaf = tree.leaf_of(p)?;
        if w > 0.0 {
            pending.entry(leaf).or_default().mu.push((i, w));
        }
    }
    for (j, (&p, &w)) in nu.support().iter().zip(nu.weights()).enumerate() {
        let leaf = tree.leaf_of(p)?;
        if w > 0.0 {
            pending.entry(leaf).or_default().nu.push((j, w));
        }
    }
    Ok(pending)
}

/// Transport plan that is optimal for the tree metric of `tree`.
///
/// Nodes are visited deepest-id first, which is bottom-up because children
/// always have larger ids than their parents. Within a node both pending
/// lists are ordered by support index and paired front to front.
pub fn flowtree_matching(
    tree: &SpatialTree,
    mu: &DiscreteDistribution,
    nu: &DiscreteDistribution,
) -> Result<FlowMatching> {
    let mut pending = seed_leaves(tree, mu, nu)?;
    let mut entries = Vec::with_capacity(mu.len() + nu.len());

    while let Some((node, Pending { mut mu, mut nu })) = pending.pop_last() {
        mu.sort_unstable_by_key(|e| e.0);
        nu.sort_unstable_by_key(|e| e.0);
        let (mut a, mut b) = (0, 0);
        while a < mu.len() && b < nu.len() {
            let (i, mi) = mu[a];
            let (j, nj) = nu[b];
            let eta = if mi >= nj {
                b += 1;
                mu[a].1 -= nj;
                if mu[a].1 < MASS_EPS {
                    a += 1;
                }
                nj
            } else {
                a += 1;
                nu[b].1 -= mi;
                if nu[b].1 < MASS_EPS {
                    b += 1;
                }
                mi
            };
            entries.push((i, j, eta));
        }
        let Some(parent) = tree.node(node).parent else {
            break;
        };
        if a < mu.len() || b < nu.len() {
            let up = pending.entry(parent).or_default();
            up.mu.extend_from_slice(&mu[a..]);
            up.nu.extend_from_slice(&nu[b..]);
        }
    }
    Ok(FlowMatching { entries })
}

/// Flowtree estimate: the tree-optimal plan priced with the ground metric.
pub fn flowtree_distance(
    tree: &SpatialTree,
    mu: &DiscreteDistribution,
    nu: &DiscreteDistribution,
    store: &PointStore,
    metric: GroundMetric,
) -> Result<f64> {
    if store.dim() != tree.dim() || store.len() != tree.point_count() {
        return invalid("point store does not match the tree");
    }
    let plan = flowtree_matching(tree, mu, nu)?;
    Ok(plan.ground_cost(mu, nu, store, metric))
}

/// Tree-Wasserstein distance `Σ_v w(v, parent(v)) · |μ(v) − ν(v)|`.
///
/// Only nodes on root paths of the supports are visited.
pub fn tree_wasserstein(
    tree: &SpatialTree,
    mu: &DiscreteDistribution,
    nu: &DiscreteDistribution,
) -> Result<f64> {
    let mut net: BTreeMap<NodeId, f64> = BTreeMap::new();
    for (&p, &w) in mu.support().iter().zip(mu.weights()) {
        *net.entry(tree.leaf_of(p)?).or_default() += w;
    }
    for (&p, &w) in nu.support().iter().zip(nu.weights()) {
        *net.entry(tree.leaf_of(p)?).or_default() -= w;
    }
    let mut total = 0.0;
    while let Some((node, imbalance)) = net.pop_last() {
        let n = tree.node(node);
        if let Some(parent) = n.parent {
            total += n.edge_weight * imbalance.abs();
            *net.entry(parent).or_default() += imbalance;
        }
    }
    Ok(total)
}
