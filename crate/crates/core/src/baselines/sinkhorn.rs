//! Entropic transport by Sinkhorn matrix scaling in the natural domain.

use serde::{Deserialize, Serialize};

use super::exact::DenseMatrix;
use crate::distributions::{DiscreteDistribution, GroundMetric, PointStore};
use crate::error::{invalid, Error, Result};

/// Smallest kernel entry; `exp(-C/reg)` is floored here instead of underflowing to zero.
pub const KERNEL_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinkhornConfig {
    pub reg: f64,
    pub max_iter: usize,
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        Self { reg: 0.1, max_iter: 10 }
    }
}

impl SinkhornConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.reg > 0.0 && self.reg.is_finite()) {
            return invalid(format!("Sinkhorn reg must be positive, got {}", self.reg));
        }
        if self.max_iter == 0 {
            return invalid("Sinkhorn max_iter must be at least 1");
        }
        Ok(())
    }
}

fn numerical(reg: f64, detail: &str) -> Error {
    Error::Numerical { reg, detail: detail.to_string() }
}

/// Runs exactly `cfg.max_iter` scaling rounds and returns `diag(u) K diag(v)`.
///
/// Each round sets `v = b / Kᵀu` then `u = a / Kv`, starting from uniform
/// `u` and `v`.
pub fn sinkhorn_plan(cost: &DenseMatrix, a: &[f64], b: &[f64], cfg: &SinkhornConfig) -> Result<DenseMatrix> {
    cfg.validate()?;
    let (n, m) = (cost.rows(), cost.cols());
    if a.len() != n || b.len() != m {
        return invalid("marginal lengths do not match the cost matrix");
    }
    let kernel = DenseMatrix::from_fn(n, m, |i, j| (-cost.get(i, j) / cfg.reg).exp().max(KERNEL_FLOOR));
    let mut u = vec![1.0 / n as f64; n];
    let mut v = vec![1.0 / m as f64; m];
    let mut ktu = vec![0.0; m];
    for _ in 0..cfg.max_iter {
        ktu.fill(0.0);
        for (i, &ui) in u.iter().enumerate() {
            for (acc, k) in ktu.iter_mut().zip(kernel.row(i)) {
                *acc += k * ui;
            }
        }
        for j in 0..m {
            if ktu[j] == 0.0 {
                return Err(numerical(cfg.reg, "zero column in the scaled kernel"));
            }
            v[j] = b[j] / ktu[j];
        }
        for i in 0..n {
            let kv: f64 = kernel.row(i).iter().zip(&v).map(|(k, vj)| k * vj).sum();
            if kv == 0.0 {
                return Err(numerical(cfg.reg, "zero row in the scaled kernel"));
            }
            u[i] = a[i] / kv;
        }
        if u.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(numerical(cfg.reg, "scaling vectors overflowed"));
        }
    }
    Ok(DenseMatrix::from_fn(n, m, |i, j| u[i] * kernel.get(i, j) * v[j]))
}

/// Transport cost `⟨C, P⟩` of the Sinkhorn plan, without the entropy term.
pub fn sinkhorn_cost(
    mu: &DiscreteDistribution,
    nu: &DiscreteDistribution,
    store: &PointStore,
    metric: GroundMetric,
    cfg: &SinkhornConfig,
) -> Result<f64> {
    mu.check_in(store)?;
    nu.check_in(store)?;
    let cost = DenseMatrix::ground_costs(mu, nu, store, metric);
    let plan = sinkhorn_plan(&cost, mu.weights(), nu.weights(), cfg)?;
    Ok(cost.dot(&plan))
}

/// Projects a nonnegative plan onto the coupling polytope of `(a, b)`.
///
/// Rows are scaled down to at most `a`, columns to at most `b`, and the
/// missing mass is added back as a rank-one correction.
pub fn round_to_feasible(plan: &DenseMatrix, a: &[f64], b: &[f64]) -> DenseMatrix {
    let (n, m) = (plan.rows(), plan.cols());
    let mut x = plan.clone();
    let rows = x.row_sums();
    for (i, &r) in rows.iter().enumerate() {
        let s = if r > 0.0 { (a[i] / r).min(1.0) } else { 1.0 };
        for j in 0..m {
            x.set(i, j, x.get(i, j) * s);
        }
    }
    let cols = x.col_sums();
    for (j, &c) in cols.iter().enumerate() {
        let s = if c > 0.0 { (b[j] / c).min(1.0) } else { 1.0 };
        for i in 0..n {
            x.set(i, j, x.get(i, j) * s);
        }
    }
    let err_a: Vec<f64> = a.iter().zip(x.row_sums()).map(|(t, r)| t - r).collect();
    let err_b: Vec<f64> = b.iter().zip(x.col_sums()).map(|(t, c)| t - c).collect();
    let norm: f64 = err_a.iter().sum();
    if norm > 0.0 {
        for i in 0..n {
            for j in 0..m {
                x.set(i, j, x.get(i, j) + err_a[i] * err_b[j] / norm);
            }
        }
    }
    x
}
