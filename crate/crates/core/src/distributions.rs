//! Points, ground metrics and discrete distributions over a shared vocabulary.

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Tolerance on the total mass of a distribution.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// `N` points in `R^D`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointStore {
    dim: usize,
    coords: Vec<f64>,
}

impl PointStore {
    /// Builds a store from row-major coordinates. Every coordinate must be finite.
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return invalid("point dimension must be at least 1");
        }
        if coords.is_empty() || coords.len() % dim != 0 {
            return invalid(format!(
                "coordinate buffer of length {} is not a nonempty multiple of dim {dim}",
                coords.len()
            ));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return invalid(format!(
                "non-finite coordinate at point {} axis {}",
                pos / dim,
                pos % dim
            ));
        }
        Ok(Self { dim, coords })
    }

    /// Builds a store from a list of rows of equal length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            if r.as_ref().len() != dim {
                return invalid(format!("row {i} has length {} != {dim}", r.as_ref().len()));
            }
            coords.extend_from_slice(r.as_ref());
        }
        Self::new(dim, coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    /// Always false; a store holds at least one point.
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.len() {
            return invalid(format!("point index {i} out of range (store has {})", self.len()));
        }
        Ok(())
    }
}

/// Ground metric on `R^D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroundMetric {
    #[default]
    L1,
    L2,
}

impl GroundMetric {
    #[inline]
    pub fn distance(self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        match self {
            GroundMetric::L1 => x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum(),
            GroundMetric::L2 => x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GroundMetric::L1 => "l1",
            GroundMetric::L2 => "l2",
        }
    }
}

impl std::str::FromStr for GroundMetric {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(GroundMetric::L1),
            "l2" => Ok(GroundMetric::L2),
            other => invalid(format!("unknown metric {other:?} (expected l1 or l2)")),
        }
    }
}

/// Distance between points `i` and `j` of `store`.
pub fn ground_distance(store: &PointStore, i: usize, j: usize, metric: GroundMetric) -> Result<f64> {
    store.check_index(i)?;
    store.check_index(j)?;
    Ok(metric.distance(store.row(i), store.row(j)))
}

/// A probability vector over distinct points of a [`PointStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    support: Vec<usize>,
    weights: Vec<f64>,
}

impl DiscreteDistribution {
    /// Validates nonnegativity, unit mass (within [`MASS_TOLERANCE`]) and distinct support.
    pub fn new(support: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return invalid("distribution support must be nonempty");
        }
        if support.len() != weights.len() {
            return invalid(format!(
                "support has {} points but {} weights were given",
                support.len(),
                weights.len()
            ));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return invalid(format!("weights must be finite and nonnegative, got {w}"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return invalid(format!("weights sum to {total}, expected 1"));
        }
        check_distinct(&support)?;
        Ok(Self { support, weights })
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn is_uniform(&self) -> bool {
        let w = 1.0 / self.len() as f64;
        self.weights.iter().all(|&x| x == w)
    }

    pub(crate) fn check_in(&self, store: &PointStore) -> Result<()> {
        for &p in &self.support {
            store.check_index(p)?;
        }
        Ok(())
    }
}

fn check_distinct(support: &[usize]) -> Result<()> {
    let mut seen = HashSet::with_capacity(support.len());
    for &p in support {
        if !seen.insert(p) {
            return invalid(format!("duplicate support index {p}; merge weights upstream"));
        }
    }
    Ok(())
}

/// Uniform weights `1/n` on a set of distinct point indices.
pub fn uniform_distribution(support: Vec<usize>) -> Result<DiscreteDistribution> {
    if support.is_empty() {
        return invalid("distribution support must be nonempty");
    }
    let w = 1.0 / support.len() as f64;
    let weights = vec![w; support.len()];
    DiscreteDistribution::new(support, weights)
}

/// A corpus of distributions over one shared point store.
#[derive(Debug, Clone)]
pub struct Dataset {
    store: Arc<PointStore>,
    items: Vec<DiscreteDistribution>,
    labels: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(store: Arc<PointStore>, items: Vec<DiscreteDistribution>) -> Result<Self> {
        if items.is_empty() {
            return invalid("dataset must contain at least one distribution");
        }
        for (k, item) in items.iter().enumerate() {
            item.check_in(&store)
                .map_err(|e| crate::Error::InvalidArgument(format!("item {k}: {e}")))?;
        }
        Ok(Self { store, items, labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.items.len() {
            return invalid(format!(
                "{} labels for {} items",
                labels.len(),
                self.items.len()
            ));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn store(&self) -> &PointStore {
        &self.store
    }

    pub fn shared_store(&self) -> Arc<PointStore> {
        Arc::clone(&self.store)
    }

    pub fn items(&self) -> &[DiscreteDistribution] {
        &self.items
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Splits off the last `ceil(frac * len)` items (after a seeded shuffle) as queries.
    ///
    /// At least one item stays in the database and at least one becomes a query.
    pub fn split_holdout(&self, frac: f64, seed: u64) -> Result<(Dataset, Vec<DiscreteDistribution>)> {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;

        if !(frac > 0.0 && frac < 1.0) {
            return invalid(format!("holdout fraction must lie in (0, 1), got {frac}"));
        }
        if self.len() < 2 {
            return invalid("holdout split needs at least two items");
        }
        let n_queries = ((frac * self.len() as f64).ceil() as usize).clamp(1, self.len() - 1);
        let mut order: Vec<usize> = (0..self.len()).collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        let (db_idx, q_idx) = order.split_at(self.len() - n_queries);
        let mut db_idx = db_idx.to_vec();
        let mut q_idx = q_idx.to_vec();
        db_idx.sort_unstable();
        q_idx.sort_unstable();
        let items = db_idx.iter().map(|&i| self.items[i].clone()).collect();
        let queries = q_idx.iter().map(|&i| self.items[i].clone()).collect();
        let mut db = Dataset::new(self.shared_store(), items)?;
        if let Some(labels) = &self.labels {
            db.labels = Some(db_idx.iter().map(|&i| labels[i].clone()).collect());
        }
        Ok((db, queries))
    }
}

/// Size and mean support length of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub size: usize,
    pub avg_support: f64,
}

pub fn dataset_stats(ds: &Dataset) -> Result<DatasetStats> {
    stats_of(ds.items())
}

pub(crate) fn stats_of(items: &[DiscreteDistribution]) -> Result<DatasetStats> {
    if items.is_empty() {
        return invalid("cannot compute statistics of an empty dataset");
    }
    // Integer sum keeps the mean independent of item order.
    let total: usize = items.iter().map(|d| d.len()).sum();
    Ok(DatasetStats {
        size: items.len(),
        avg_support: total as f64 / items.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn l1_identity_and_hand_value() {
        let store = PointStore::from_rows(&[[0.0, 0.0], [1.0, 2.0], [4.0, 0.0]]).unwrap();
        assert_eq!(ground_distance(&store, 0, 0, GroundMetric::L1).unwrap(), 0.0);
        assert_eq!(ground_distance(&store, 1, 2, GroundMetric::L1).unwrap(), 5.0);
    }

    #[test]
    fn l1_matches_scalar_loop() {
        let mut r = rng(7);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..7).map(|_| r.random_range(-5.0..5.0)).collect())
            .collect();
        let store = PointStore::from_rows(&rows).unwrap();
        for k in 0..20 {
            let (i, j) = (2 * k, 2 * k + 1);
            let mut acc = 0.0f64;
            for axis in 0..7 {
                let diff = rows[i][axis] - rows[j][axis];
                acc += if diff < 0.0 { -diff } else { diff };
            }
            let d = ground_distance(&store, i, j, GroundMetric::L1).unwrap();
            assert!((d - acc).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_range_index() {
        let store = PointStore::from_rows(&[[0.0]]).unwrap();
        assert!(ground_distance(&store, 0, 1, GroundMetric::L1).is_err());
    }

    #[test]
    fn metric_axioms_on_random_triples() {
        let mut r = rng(11);
        let rows: Vec<Vec<f64>> = (0..3000)
            .map(|_| (0..5).map(|_| r.random_range(-3.0..3.0)).collect())
            .collect();
        let store = PointStore::from_rows(&rows).unwrap();
        for metric in [GroundMetric::L1, GroundMetric::L2] {
            for t in 0..1000 {
                let (a, b, c) = (3 * t, 3 * t + 1, 3 * t + 2);
                let ab = ground_distance(&store, a, b, metric).unwrap();
                let ba = ground_distance(&store, b, a, metric).unwrap();
                let bc = ground_distance(&store, b, c, metric).unwrap();
                let ac = ground_distance(&store, a, c, metric).unwrap();
                assert!(ab >= 0.0);
                assert!((ab - ba).abs() < 1e-12);
                assert!(ac <= ab + bc + 1e-9);
            }
        }
    }

    #[test]
    fn rejects_non_finite_coordinates() {
        assert!(PointStore::new(2, vec![0.0, f64::NAN]).is_err());
        assert!(PointStore::new(0, vec![]).is_err());
        assert!(PointStore::new(2, vec![1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn uniform_weights() {
        let d = uniform_distribution(vec![3]).unwrap();
        assert_eq!(d.weights(), &[1.0]);
        let d = uniform_distribution(vec![0, 1, 2, 3]).unwrap();
        assert_eq!(d.weights(), &[0.25; 4]);
        let d = uniform_distribution((0..85).collect()).unwrap();
        assert!(d.weights().iter().all(|&w| w == 1.0 / 85.0));
        assert!((d.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(d.is_uniform());
    }

    #[test]
    fn uniform_rejects_duplicates_and_empty() {
        assert!(uniform_distribution(vec![1, 2, 1]).is_err());
        assert!(uniform_distribution(vec![]).is_err());
    }

    #[test]
    fn construction_rejects_bad_weights() {
        assert!(DiscreteDistribution::new(vec![0, 1], vec![1.5, -0.5]).is_err());
        assert!(DiscreteDistribution::new(vec![0, 1], vec![0.5, 0.5 + 2e-9]).is_err());
        assert!(DiscreteDistribution::new(vec![0, 1], vec![0.5, 0.5 + 5e-10]).is_ok());
        assert!(DiscreteDistribution::new(vec![0], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn dataset_rejects_out_of_range_support() {
        let store = Arc::new(PointStore::from_rows(&[[0.0], [1.0]]).unwrap());
        let d = uniform_distribution(vec![0, 2]).unwrap();
        assert!(Dataset::new(store.clone(), vec![d]).is_err());
        assert!(Dataset::new(store, vec![]).is_err());
    }

    #[test]
    fn stats_single_item() {
        let store = Arc::new(PointStore::from_rows(&[[0.0]; 5]).unwrap());
        let ds = Dataset::new(store, vec![uniform_distribution((0..5).collect()).unwrap()]).unwrap();
        let s = dataset_stats(&ds).unwrap();
        assert_eq!(s.size, 1);
        assert_eq!(s.avg_support, 5.0);
    }

    #[test]
    fn stats_mixed_support_sizes_and_order_invariance() {
        let store = Arc::new(PointStore::from_rows(&vec![[0.0]; 20]).unwrap());
        let mut r = rng(3);
        let sizes: Vec<usize> = (0..100).map(|k| if k % 2 == 0 { 10 } else { 20 }).collect();
        let mut items: Vec<DiscreteDistribution> = sizes
            .iter()
            .map(|&s| uniform_distribution((0..s).collect()).unwrap())
            .collect();
        let ds = Dataset::new(store.clone(), items.clone()).unwrap();
        let s = dataset_stats(&ds).unwrap();
        assert_eq!(s.size, 100);
        assert_eq!(s.avg_support, 15.0);

        use rand::seq::SliceRandom;
        items.shuffle(&mut r);
        let shuffled = Dataset::new(store, items).unwrap();
        assert_eq!(dataset_stats(&shuffled).unwrap(), s);
    }

    #[test]
    fn holdout_split_partitions_items() {
        let store = Arc::new(PointStore::from_rows(&vec![[0.0]; 10]).unwrap());
        let items: Vec<_> = (0..10).map(|i| uniform_distribution(vec![i]).unwrap()).collect();
        let ds = Dataset::new(store, items).unwrap();
        let (db, q) = ds.split_holdout(0.3, 1).unwrap();
        assert_eq!(q.len(), 3);
        assert_eq!(db.len(), 7);
        let mut all: Vec<usize> = db.items().iter().chain(&q).map(|d| d.support()[0]).collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        let (db2, q2) = ds.split_holdout(0.3, 1).unwrap();
        assert_eq!(db2.items(), db.items());
        assert_eq!(q2, q);
    }
}
