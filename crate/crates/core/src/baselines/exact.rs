//! Exact discrete optimal transport by successive shortest paths.
//!
//! The transportation problem is solved on the complete bipartite residual
//! graph with Dijkstra over reduced costs. Node potentials double as a dual
//! solution, which [`TransportSolution::certify`] checks for feasibility and
//! complementary slackness.

use crate::distributions::{DiscreteDistribution, GroundMetric, PointStore};
use crate::error::{invalid, Error, Result};
use crate::flowtree::FlowMatching;

/// Masses below this are treated as zero.
const FLOW_EPS: f64 = 1e-13;

/// Default limit on `n + m` for the exact solver.
pub const DEFAULT_MAX_SUPPORT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactConfig {
    /// Largest accepted total support size `n + m`.
    pub max_support: usize,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self { max_support: DEFAULT_MAX_SUPPORT }
    }
}

/// Dense row-major `rows × cols` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Ground-metric cost matrix between the supports of `mu` and `nu`.
    pub fn ground_costs(
        mu: &DiscreteDistribution,
        nu: &DiscreteDistribution,
        store: &PointStore,
        metric: GroundMetric,
    ) -> Self {
        let (su, sv) = (mu.support(), nu.support());
        Self::from_fn(su.len(), sv.len(), |i, j| metric.distance(store.row(su[i]), store.row(sv[j])))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (o, v) in out.iter_mut().zip(self.row(i)) {
                *o += v;
            }
        }
        out
    }

    /// Frobenius inner product `⟨self, other⟩`.
    pub fn dot(&self, other: &DenseMatrix) -> f64 {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }
}

/// Optimal plan with the dual potentials that certify it.
#[derive(Debug, Clone)]
pub struct TransportSolution {
    pub cost: f64,
    pub plan: FlowMatching,
    /// Dual variables `f` (rows) and `g` (columns) with `f_i + g_j <= C_ij`.
    pub row_duals: Vec<f64>,
    pub col_duals: Vec<f64>,
}

/// Result of checking a primal/dual pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalityCertificate {
    pub primal: f64,
    pub dual: f64,
    /// `max(0, max_ij f_i + g_j − C_ij)`.
    pub dual_violation: f64,
    /// `max |C_ij − f_i − g_j|` over cells carrying flow.
    pub slackness_violation: f64,
    pub marginal_error: f64,
    /// `|primal − dual| / max(1, |primal|)`.
    pub relative_gap: f64,
}

impl OptimalityCertificate {
    pub fn holds(&self, tol: f64) -> bool {
        self.relative_gap <= tol
            && self.dual_violation <= tol
            && self.slackness_violation <= tol
            && self.marginal_error <= tol
    }
}

impl TransportSolution {
    pub fn certify(&self, cost: &DenseMatrix, a: &[f64], b: &[f64]) -> OptimalityCertificate {
        let (f, g) = (&self.row_duals, &self.col_duals);
        let mut dual_violation: f64 = 0.0;
        for i in 0..cost.rows() {
            for j in 0..cost.cols() {
                dual_violation = dual_violation.max(f[i] + g[j] - cost.get(i, j));
            }
        }
        let slackness_violation = self
            .plan
            .entries
            .iter()
            .map(|&(i, j, _)| (cost.get(i, j) - f[i] - g[j]).abs())
            .fold(0.0, f64::max);
        let primal = self.plan.cost_by(|i, j| cost.get(i, j));
        let dual: f64 = a.iter().zip(f).map(|(x, y)| x * y).sum::<f64>()
            + b.iter().zip(g).map(|(x, y)| x * y).sum::<f64>();
        OptimalityCertificate {
            primal,
            dual,
            dual_violation,
            slackness_violation,
            marginal_error: self.plan.marginal_error(a, b),
            relative_gap: (primal - dual).abs() / primal.abs().max(1.0),
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Node {
    Row(usize),
    Col(usize),
}

/// Minimum-cost coupling of `a` and `b` under `cost`.
///
/// `a` and `b` must be nonnegative with (numerically) equal totals.
pub fn solve_transport(cost: &DenseMatrix, a: &[f64], b: &[f64]) -> Result<TransportSolution> {
    let (n, m) = (cost.rows(), cost.cols());
    if a.len() != n || b.len() != m {
        return invalid(format!(
            "marginals of length {}x{} do not match a {n}x{m} cost matrix",
            a.len(),
            b.len()
        ));
    }
    if n == 0 || m == 0 {
        return invalid("transport problem needs nonempty marginals");
    }
    if cost.data().iter().any(|c| !c.is_finite()) {
        return invalid("cost matrix contains non-finite entries");
    }

    let mut supply = a.to_vec();
    let mut demand = b.to_vec();
    let mut flow = vec![0.0; n * m];
    let mut pot_row = vec![0.0; n];
    let mut pot_col: Vec<f64> = (0..m)
        .map(|j| (0..n).map(|i| cost.get(i, j)).fold(f64::INFINITY, f64::min))
        .collect();

    let mut dist_row = vec![0.0; n];
    let mut dist_col = vec![0.0; m];
    let mut done_row = vec![false; n];
    let mut done_col = vec![false; m];
    let mut prev_col = vec![0usize; m];
    let mut prev_row: Vec<Option<usize>> = vec![None; n];

    loop {
        if supply.iter().all(|&s| s <= FLOW_EPS) || demand.iter().all(|&d| d <= FLOW_EPS) {
            break;
        }
        for i in 0..n {
            dist_row[i] = if supply[i] > FLOW_EPS { 0.0 } else { f64::INFINITY };
            done_row[i] = false;
            prev_row[i] = None;
        }
        dist_col.fill(f64::INFINITY);
        done_col.fill(false);

        // Dense Dijkstra from every row with remaining supply.
        let target = loop {
            let mut best: Option<(f64, Node)> = None;
            for i in 0..n {
                if !done_row[i] && dist_row[i] < best.map_or(f64::INFINITY, |b| b.0) {
                    best = Some((dist_row[i], Node::Row(i)));
                }
            }
            for j in 0..m {
                if !done_col[j] && dist_col[j] < best.map_or(f64::INFINITY, |b| b.0) {
                    best = Some((dist_col[j], Node::Col(j)));
                }
            }
            match best {
                None => break None,
                Some((d, Node::Row(i))) => {
                    done_row[i] = true;
                    let crow = cost.row(i);
                    for j in 0..m {
                        if done_col[j] {
                            continue;
                        }
                        let rc = (crow[j] + pot_row[i] - pot_col[j]).max(0.0);
                        if d + rc < dist_col[j] {
                            dist_col[j] = d + rc;
                            prev_col[j] = i;
                        }
                    }
                }
                Some((d, Node::Col(j))) => {
                    done_col[j] = true;
                    if demand[j] > FLOW_EPS {
                        break Some(j);
                    }
                    for i in 0..n {
                        if done_row[i] || flow[i * m + j] <= FLOW_EPS {
                            continue;
                        }
                        let rc = (-cost.get(i, j) + pot_col[j] - pot_row[i]).max(0.0);
                        if d + rc < dist_row[i] {
                            dist_row[i] = d + rc;
                            prev_row[i] = Some(j);
                        }
                    }
                }
            }
        };
        let Some(target) = target else {
            return Err(Error::InvalidArgument(
                "transport problem has no augmenting path; marginals are unbalanced".into(),
            ));
        };

        let limit = dist_col[target];
        for i in 0..n {
            pot_row[i] += dist_row[i].min(limit);
        }
        for j in 0..m {
            pot_col[j] += dist_col[j].min(limit);
        }

        // Walk back to the source row, collecting the bottleneck.
        let mut delta = demand[target];
        let mut j = target;
        let source = loop {
            let i = prev_col[j];
            match prev_row[i] {
                Some(back) => {
                    delta = delta.min(flow[i * m + back]);
                    j = back;
                }
                None => break i,
            }
        };
        delta = delta.min(supply[source]);

        let mut j = target;
        loop {
            let i = prev_col[j];
            flow[i * m + j] += delta;
            match prev_row[i] {
                Some(back) => {
                    let f = &mut flow[i * m + back];
                    *f -= delta;
                    if *f <= FLOW_EPS {
                        *f = 0.0;
                    }
                    j = back;
                }
                None => break,
            }
        }
        supply[source] -= delta;
        if supply[source] <= FLOW_EPS {
            supply[source] = 0.0;
        }
        demand[target] -= delta;
        if demand[target] <= FLOW_EPS {
            demand[target] = 0.0;
        }
    }

    let mut entries = Vec::new();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..m {
            let f = flow[i * m + j];
            if f > 0.0 {
                entries.push((i, j, f));
                total += f * cost.get(i, j);
            }
        }
    }
    Ok(TransportSolution {
        cost: total,
        plan: FlowMatching { entries },
        row_duals: pot_row.iter().map(|p| -p).collect(),
        col_duals: pot_col,
    })
}

/// Exact 1-Wasserstein distance and an optimal plan, with the default capacity.
pub fn exact_wasserstein(
    mu: &DiscreteDistribution,
    nu: &DiscreteDistribution,
    store: &PointStore,
    metric: GroundMetric,
) -> Result<TransportSolution> {
    exact_wasserstein_with(mu, nu, store, metric, &ExactConfig::default())
}

pub fn exact_wasserstein_with(
    mu: &DiscreteDistribution,
    nu: &DiscreteDistribution,
    store: &PointStore,
    metric: GroundMetric,
    cfg: &ExactConfig,
) -> Result<TransportSolution> {
    let size = mu.len() + nu.len();
    if size > cfg.max_support {
        return Err(Error::Capacity { size, limit: cfg.max_support });
    }
    mu.check_in(store)?;
    nu.check_in(store)?;
    let cost = DenseMatrix::ground_costs(mu, nu, store, metric);
    solve_transport(&cost, mu.weights(), nu.weights())
}
