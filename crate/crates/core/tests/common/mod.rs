#![allow(dead_code)]

pub mod lp;

use std::sync::Arc;

use ot_retrieve::{Dataset, DiscreteDistribution, PointStore};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A store plus two distributions over it.
pub struct Instance {
    pub store: PointStore,
    pub mu: DiscreteDistribution,
    pub nu: DiscreteDistribution,
}

pub fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / sum).collect()
}

/// Supports of size `n` and `m` drawn from `points` random points in `[0, 10)^d`.
///
/// Supports may overlap; coordinates are rounded to a grid of 1/8 so that
/// ties and shared coordinates occur.
pub fn random_instance(seed: u64, n: usize, m: usize, d: usize, points: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..points * d).map(|_| (rng.random_range(0.0..10.0f64) * 8.0).floor() / 8.0).collect();
    let store = PointStore::new(d, coords).unwrap();
    let su = sample(&mut rng, points, n).into_vec();
    let sv = sample(&mut rng, points, m).into_vec();
    let wu = random_weights(&mut rng, n);
    let wv = random_weights(&mut rng, m);
    Instance {
        store,
        mu: DiscreteDistribution::new(su, wu).unwrap(),
        nu: DiscreteDistribution::new(sv, wv).unwrap(),
    }
}

pub fn uniform_dataset(seed: u64, points: usize, d: usize, items: usize, support: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..points * d).map(|_| rng.random::<f64>()).collect();
    let store = Arc::new(PointStore::new(d, coords).unwrap());
    let items = (0..items)
        .map(|_| ot_retrieve::uniform_distribution(sample(&mut rng, points, support).into_vec()).unwrap())
        .collect();
    Dataset::new(store, items).unwrap()
}
