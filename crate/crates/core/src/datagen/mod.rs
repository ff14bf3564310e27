//! Synthetic classification data and federated partitioning.
//!
//! Gaussian-mixture datasets stand in for image benchmarks; the network only
//! sees model sizes, so the learning task just has to be non-trivial and
//! reproducible.

mod partition;
mod stragglers;

pub use partition::{class_histogram, partition, total_variation, PartitionMode, PartitionSpec, Shard};
pub use stragglers::{assign_stragglers, straggler_count, StragglerSpec};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DataError {
    #[error("invalid dataset parameters: {0}")]
    BadDataset(String),
    #[error("invalid partition: {0}")]
    BadPartition(String),
    #[error("could not give every worker at least {min} samples after {tries} draws")]
    ShardTooSmall { min: usize, tries: usize },
    #[error("invalid straggler spec: {0}")]
    BadStragglers(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub samples: Vec<Sample>,
    pub dim: usize,
    pub classes: usize,
    pub means: Vec<Vec<f64>>,
    pub seed: u64,
}

impl SyntheticDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn select(&self, indices: &[usize]) -> Vec<Sample> {
        indices.iter().map(|&i| self.samples[i].clone()).collect()
    }
}

/// Balanced Gaussian mixture: unit-variance isotropic noise around one mean
/// per class, class means at pairwise distance at least `separation`.
pub fn generate(n: usize, dim: usize, classes: usize, separation: f64, seed: u64) -> Result<SyntheticDataset, DataError> {
    if classes < 2 {
        return Err(DataError::BadDataset("need at least two classes".into()));
    }
    if n < classes {
        return Err(DataError::BadDataset(format!("{n} samples cannot cover {classes} classes")));
    }
    if dim == 0 {
        return Err(DataError::BadDataset("feature dimension must be positive".into()));
    }
    if !(separation > 0.0 && separation.is_finite()) {
        return Err(DataError::BadDataset("separation must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means = class_means(dim, classes, separation, &mut rng);

    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % classes;
        let x = means[label]
            .iter()
            .map(|m| m + rng.sample::<f64, _>(StandardNormal))
            .collect();
        samples.push(Sample { x, label });
    }
    samples.shuffle(&mut rng);
    Ok(SyntheticDataset {
        samples,
        dim,
        classes,
        means,
        seed,
    })
}

fn class_means(dim: usize, classes: usize, separation: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    if classes <= dim {
        // scaled, sign-flipped basis vectors on a random subset of axes:
        // pairwise distance is exactly `separation`
        let mut axes: Vec<usize> = (0..dim).collect();
        axes.shuffle(rng);
        let scale = separation / std::f64::consts::SQRT_2;
        return axes[..classes]
            .iter()
            .map(|&a| {
                let mut m = vec![0.0; dim];
                m[a] = if rng.random::<bool>() { scale } else { -scale };
                m
            })
            .collect();
    }
    let mut side = separation * (classes as f64).powf(1.0 / dim as f64) * 2.0;
    loop {
        let mut means: Vec<Vec<f64>> = Vec::with_capacity(classes);
        let mut tries = 0;
        while means.len() < classes && tries < 10_000 {
            tries += 1;
            let cand: Vec<f64> = (0..dim).map(|_| rng.random_range(-side / 2.0..side / 2.0)).collect();
            if means.iter().all(|m| distance(m, &cand) >= separation) {
                means.push(cand);
            }
        }
        if means.len() == classes {
            return means;
        }
        side *= 1.5;
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classes_are_balanced() {
        let ds = generate(1000, 20, 10, 3.0, 1).unwrap();
        let hist = class_histogram(&ds, &(0..ds.len()).collect::<Vec<_>>());
        assert_eq!(hist, vec![100; 10]);
        assert!(ds.samples.iter().all(|s| s.x.len() == 20 && s.label < 10));
    }

    #[test]
    fn same_seed_same_dataset() {
        assert_eq!(generate(200, 5, 4, 2.0, 9).unwrap(), generate(200, 5, 4, 2.0, 9).unwrap());
        assert_ne!(generate(200, 5, 4, 2.0, 9).unwrap(), generate(200, 5, 4, 2.0, 10).unwrap());
    }

    #[test]
    fn means_respect_separation() {
        for (dim, classes) in [(20, 10), (2, 7)] {
            let ds = generate(100, dim, classes, 4.0, 3).unwrap();
            for i in 0..classes {
                for j in 0..i {
                    assert!(distance(&ds.means[i], &ds.means[j]) >= 4.0 - 1e-12);
                }
            }
        }
    }

    #[test]
    fn invalid_sizes_are_rejected() {
        assert!(generate(5, 3, 10, 1.0, 0).is_err());
        assert!(generate(50, 0, 10, 1.0, 0).is_err());
        assert!(generate(50, 3, 10, 0.0, 0).is_err());
        assert!(generate(50, 3, 1, 1.0, 0).is_err());
    }
}
