//! One-dimensional transport: exact sorted sweep and random-projection 1-Greedy.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::distributions::{DiscreteDistribution, GroundMetric, PointStore};
use crate::error::{invalid, Result};
use crate::flowtree::{FlowMatching, MASS_EPS};

/// A 1-D position for every point of a store.
#[derive(Debug, Clone, PartialEq)]
pub struct LineEmbedding {
    coords: Vec<f64>,
    seed: Option<u64>,
}

impl LineEmbedding {
    pub fn from_coords(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return invalid("line coordinates must be finite");
        }
        Ok(Self { coords, seed: None })
    }

    /// Uses coordinate `axis` of every point.
    pub fn from_axis(store: &PointStore, axis: usize) -> Result<Self> {
        if axis >= store.dim() {
            return invalid(format!("axis {axis} out of range for dim {}", store.dim()));
        }
        Self::from_coords((0..store.len()).map(|i| store.row(i)[axis]).collect())
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn get(&self, point: usize) -> Result<f64> {
        match self.coords.get(point) {
            Some(&c) => Ok(c),
            None => invalid(format!("point {point} has no line coordinate")),
        }
    }
}

/// Inner product of every point with one uniformly random unit direction.
pub fn project_to_line_random(store: &PointStore, seed: u64) -> LineEmbedding {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = store.dim();
    let direction = loop {
        let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            break g.into_iter().map(|x| x / norm).collect::<Vec<_>>();
        }
    };
    let coords = (0..store.len())
        .map(|i| store.row(i).iter().zip(&direction).map(|(x, u)| x * u).sum())
        .collect();
    LineEmbedding { coords, seed: Some(seed) }
}

/// Plan and line cost of the optimal 1-D transport under `|x − y|`.
#[derive(Debug, Clone)]
pub struct LineSolution {
    pub cost_on_line: f64,
    pub plan: FlowMatching,
}

fn sorted_by_line(d: &DiscreteDistribution, line: &LineEmbedding) -> Result<Vec<(f64, usize)>> {
    let mut order = d
        .support()
        .iter()
        .enumerate()
        .map(|(k, &p)| Ok((line.get(p)?, k)))
        .collect::<Result<Vec<_>>>()?;
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(order)
}

/// Sorts both supports along the line and moves mass front to front.
pub fn solve_1d_exact(
    mu: &DiscreteDistribution,
    nu: &DiscreteDistribution,
    line: &LineEmbedding,
) -> Result<LineSolution> {
    let xs = sorted_by_line(mu, line)?;
    let ys = sorted_by_line(nu, line)?;
    let mut rem_x: Vec<f64> = xs.iter().map(|&(_, k)| mu.weights()[k]).collect();
    let mut rem_y: Vec<f64> = ys.iter().map(|&(_, k)| nu.weights()[k]).collect();
    let (mut a, mut b) = (0, 0);
    let mut entries = Vec::with_capacity(xs.len() + ys.len());
    let mut cost = 0.0;
    while a < xs.len() && b < ys.len() {
        let eta = rem_x[a].min(rem_y[b]);
        if eta > 0.0 {
            entries.push((xs[a].1, ys[b].1, eta));
            cost += eta * (xs[a].0 - ys[b].0).abs();
        }
        rem_x[a] -= eta;
        rem_y[b] -= eta;
        let (done_x, done_y) = (rem_x[a] < MASS_EPS, rem_y[b] < MASS_EPS);
        if done_x {
            a += 1;
        }
        if done_y {
            b += 1;
        }
    }
    Ok(LineSolution { cost_on_line: cost, plan: FlowMatching { entries } })
}

/// 1-Greedy: the exact line plan priced with the ground metric in `R^D`.
pub fn one_greedy_distance(
    mu: &DiscreteDistribution,
    nu: &DiscreteDistribution,
    line: &LineEmbedding,
    store: &PointStore,
    metric: GroundMetric,
) -> Result<f64> {
    mu.check_in(store)?;
    nu.check_in(store)?;
    let sol = solve_1d_exact(mu, nu, line)?;
    Ok(sol.plan.ground_cost(mu, nu, store, metric))
}
