use super::DataError;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Workers that run fewer local epochs per round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StragglerSpec {
    pub fraction: f64,
    pub straggler_epochs: u32,
    pub regular_epochs: u32,
}

impl StragglerSpec {
    pub fn none(epochs: u32) -> StragglerSpec {
        StragglerSpec {
            fraction: 0.0,
            straggler_epochs: epochs.saturating_sub(1).max(1),
            regular_epochs: epochs,
        }
    }
}

/// `fraction * workers` rounded to nearest, halves rounding up.
pub fn straggler_count(workers: usize, fraction: f64) -> usize {
    ((fraction * workers as f64 + 0.5).floor() as usize).min(workers)
}

/// Local epoch count per worker index.
pub fn assign_stragglers(workers: usize, spec: &StragglerSpec, seed: u64) -> Result<Vec<u32>, DataError> {
    if !(0.0..=1.0).contains(&spec.fraction) {
        return Err(DataError::BadStragglers("fraction must lie in [0, 1]".into()));
    }
    if spec.straggler_epochs == 0 || spec.straggler_epochs >= spec.regular_epochs {
        return Err(DataError::BadStragglers(
            "straggler epochs must be positive and below the regular epochs".into(),
        ));
    }
    let count = straggler_count(workers, spec.fraction);
    let mut order: Vec<usize> = (0..workers).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut epochs = vec![spec.regular_epochs; workers];
    for &w in &order[..count] {
        epochs[w] = spec.straggler_epochs;
    }
    Ok(epochs)
}
