//! Seeded synthetic corpora for tests and benchmarks.
//!
//! The cluster corpus mimics a bag-of-embedded-words collection: a vocabulary
//! of points scattered around Gaussian cluster centers ("topics") and
//! documents that draw their support from the vocabulary of a few topics.

use std::sync::Arc;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::distributions::{uniform_distribution, Dataset, PointStore};
use crate::error::{invalid, Result};

/// `n` i.i.d. uniform points in `[0, 1]^d`.
pub fn uniform_cube(n: usize, d: usize, seed: u64) -> PointStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..n * d).map(|_| rng.random::<f64>()).collect();
    PointStore::new(d, coords).expect("n, d >= 1")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterCorpus {
    pub vocabulary: usize,
    pub dim: usize,
    pub clusters: usize,
    pub items: usize,
    pub support: usize,
    /// Standard deviation of the cluster centers around the origin.
    pub center_std: f64,
    /// Standard deviation of points around their center.
    pub cluster_std: f64,
    /// Each item mixes between 1 and this many clusters.
    pub max_topics: usize,
    pub seed: u64,
}

impl Default for ClusterCorpus {
    fn default() -> Self {
        Self {
            vocabulary: 2000,
            dim: 50,
            clusters: 10,
            items: 500,
            support: 20,
            center_std: 1.0,
            cluster_std: 0.5,
            max_topics: 10,
            seed: 0,
        }
    }
}

impl ClusterCorpus {
    pub fn generate(&self) -> Result<Dataset> {
        if self.clusters == 0 || self.max_topics == 0 || self.vocabulary < self.clusters {
            return invalid("cluster corpus needs clusters >= 1, max_topics >= 1, vocabulary >= clusters");
        }
        let per_cluster = self.vocabulary / self.clusters;
        if per_cluster < self.support {
            return invalid("each cluster must hold at least `support` vocabulary points");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let centers = Normal::new(0.0, self.center_std).map_err(|e| crate::Error::InvalidArgument(e.to_string()))?;
        let noise = Normal::new(0.0, self.cluster_std).map_err(|e| crate::Error::InvalidArgument(e.to_string()))?;

        let center: Vec<Vec<f64>> = (0..self.clusters)
            .map(|_| (0..self.dim).map(|_| centers.sample(&mut rng)).collect())
            .collect();
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); self.clusters];
        let mut coords = Vec::with_capacity(self.vocabulary * self.dim);
        for i in 0..self.vocabulary {
            let c = i % self.clusters;
            members[c].push(i);
            coords.extend(center[c].iter().map(|&m| m + noise.sample(&mut rng)));
        }
        let store = Arc::new(PointStore::new(self.dim, coords)?);

        let topics: Vec<usize> = (0..self.clusters).collect();
        let mut items = Vec::with_capacity(self.items);
        for _ in 0..self.items {
            let k = rng.random_range(1..=self.max_topics.min(self.clusters));
            let chosen: Vec<usize> = topics.choose_multiple(&mut rng, k).copied().collect();
            let mut pool: Vec<usize> = chosen.iter().flat_map(|&c| members[c].iter().copied()).collect();
            pool.shuffle(&mut rng);
            pool.truncate(self.support);
            pool.sort_unstable();
            items.push(uniform_distribution(pool)?);
        }
        Dataset::new(store, items)
    }
}
