use super::{DataError, SyntheticDataset};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionMode {
    Iid,
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionSpec {
    pub mode: PartitionMode,
    /// Dirichlet concentration; ignored in iid mode
    pub beta: f64,
    pub workers: usize,
    /// every shard must hold at least this many samples (the batch size)
    pub min_shard: usize,
}

/// Sample indices held by one worker, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shard {
    pub indices: Vec<usize>,
}

impl Shard {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

const MAX_DRAWS: usize = 1000;

/// Splits the dataset into disjoint shards covering every sample.
///
/// Dirichlet mode draws, per class, worker proportions from `Dir(beta)` and
/// cuts the shuffled class members at the cumulative proportions. The whole
/// draw is repeated while some shard is smaller than `min_shard`.
pub fn partition(ds: &SyntheticDataset, spec: &PartitionSpec, seed: u64) -> Result<Vec<Shard>, DataError> {
    if spec.workers == 0 {
        return Err(DataError::BadPartition("no workers".into()));
    }
    if spec.mode == PartitionMode::Dirichlet && !(spec.beta > 0.0 && spec.beta.is_finite()) {
        return Err(DataError::BadPartition("dirichlet beta must be positive".into()));
    }
    if spec.workers * spec.min_shard.max(1) > ds.len() {
        return Err(DataError::ShardTooSmall {
            min: spec.min_shard,
            tries: 0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match spec.mode {
        PartitionMode::Iid => {
            let mut idx: Vec<usize> = (0..ds.len()).collect();
            idx.shuffle(&mut rng);
            let k = spec.workers;
            let base = idx.len() / k;
            let extra = idx.len() % k;
            let mut shards = Vec::with_capacity(k);
            let mut start = 0;
            for w in 0..k {
                let size = base + usize::from(w < extra);
                let mut indices = idx[start..start + size].to_vec();
                indices.sort_unstable();
                shards.push(Shard { indices });
                start += size;
            }
            Ok(shards)
        }
        PartitionMode::Dirichlet => {
            let gamma = Gamma::new(spec.beta, 1.0).map_err(|e| DataError::BadPartition(e.to_string()))?;
            let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.classes];
            for (i, s) in ds.samples.iter().enumerate() {
                by_class[s.label].push(i);
            }
            for _ in 0..MAX_DRAWS {
                let mut shards = vec![Vec::new(); spec.workers];
                for members in &by_class {
                    let mut members = members.clone();
                    members.shuffle(&mut rng);
                    let mut props: Vec<f64> = (0..spec.workers).map(|_| gamma.sample(&mut rng)).collect();
                    let total: f64 = props.iter().sum();
                    if !(total > 0.0) {
                        props = vec![1.0; spec.workers];
                    }
                    let total: f64 = props.iter().sum();
                    let n = members.len();
                    let mut acc = 0.0;
                    let mut start = 0;
                    for (w, p) in props.iter().enumerate() {
                        acc += p / total;
                        let end = if w + 1 == spec.workers {
                            n
                        } else {
                            ((acc * n as f64) as usize).clamp(start, n)
                        };
                        shards[w].extend_from_slice(&members[start..end]);
                        start = end;
                    }
                }
                if shards.iter().all(|s| s.len() >= spec.min_shard.max(1)) {
                    return Ok(shards
                        .into_iter()
                        .map(|mut indices| {
                            indices.sort_unstable();
                            Shard { indices }
                        })
                        .collect());
                }
            }
            Err(DataError::ShardTooSmall {
                min: spec.min_shard,
                tries: MAX_DRAWS,
            })
        }
    }
}

/// Per-class sample counts over `indices`.
pub fn class_histogram(ds: &SyntheticDataset, indices: &[usize]) -> Vec<usize> {
    let mut h = vec![0; ds.classes];
    for &i in indices {
        h[ds.samples[i].label] += 1;
    }
    h
}

/// Total-variation distance between two histograms after normalization.
pub fn total_variation(a: &[usize], b: &[usize]) -> f64 {
    let sa: usize = a.iter().sum();
    let sb: usize = b.iter().sum();
    0.5 * a
        .iter()
        .zip(b)
        .map(|(x, y)| (*x as f64 / sa as f64 - *y as f64 / sb as f64).abs())
        .sum::<f64>()
}
