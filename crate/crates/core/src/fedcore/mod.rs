//! Federated learning engine: regularized local SGD workers, a synchronous
//! aggregator and the message protocol between them.

mod aggregator;
mod comm;
mod model;
mod sgd;
mod worker;

pub use aggregator::{AckStatus, AggEvent, AggregatorState, Phase, Transport, WorkerRecord};
pub use comm::{CommMessage, MessageKind, STUB_BYTES};
pub use model::{
    build_model, serialize_model, Logistic, Mlp, Model, ModelKind, ModelVector, SquaredDistance, MODEL_HEADER_BYTES,
};
pub use sgd::local_sgd_step;
pub use worker::{run_local_training, WorkerState, WorkerStatus};

use crate::datagen::Sample;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FlError {
    #[error("model dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("non-finite gradient")]
    NonFinite,
    #[error("empty mini-batch")]
    EmptyBatch,
    #[error("worker {0} has an empty shard")]
    EmptyShard(u32),
    #[error("worker {worker}: cannot go from {from:?} to {to:?}")]
    BadTransition {
        worker: u32,
        from: WorkerStatus,
        to: WorkerStatus,
    },
    #[error("nothing to aggregate")]
    EmptyAggregate,
    #[error("aggregation weight must be positive")]
    ZeroWeight,
    #[error("round {0} barrier not yet released")]
    Barrier(u32),
    #[error("no registered workers")]
    NoWorkers,
    #[error("worker {0} registered twice")]
    AlreadyRegistered(u32),
    #[error("message from unregistered worker {0}")]
    UnknownWorker(u32),
    #[error("local model message from worker {0} carries no model")]
    MissingModel(u32),
    #[error("empty evaluation set")]
    EmptyDataset,
    #[error("invalid training config: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub eta: f64,
    pub rho: f64,
    pub batch_size: usize,
    pub max_rounds: u32,
    pub target_loss: Option<f64>,
    pub batch_compute_ms: f64,
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), FlError> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(FlError::BadConfig("eta must be positive".into()));
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(FlError::BadConfig("rho must be non-negative".into()));
        }
        if self.batch_size == 0 {
            return Err(FlError::BadConfig("batch size must be positive".into()));
        }
        if self.max_rounds == 0 {
            return Err(FlError::BadConfig("max rounds must be positive".into()));
        }
        if !(self.batch_compute_ms >= 0.0 && self.batch_compute_ms.is_finite()) {
            return Err(FlError::BadConfig("per-batch compute time must be non-negative".into()));
        }
        Ok(())
    }
}

/// Weighted average with weights `n_k / sum(n)`.
pub fn aggregate(models: &[(&ModelVector, usize)]) -> Result<ModelVector, FlError> {
    let (first, _) = models.first().ok_or(FlError::EmptyAggregate)?;
    let total: usize = models.iter().map(|(_, n)| *n).sum();
    let mut out = vec![0.0; first.dim()];
    for (m, n) in models {
        first.check_dim(m)?;
        if *n == 0 {
            return Err(FlError::ZeroWeight);
        }
        let lambda = *n as f64 / total as f64;
        for (o, w) in out.iter_mut().zip(&m.weights) {
            *o += lambda * w;
        }
    }
    Ok(ModelVector::new(out))
}

/// Mean loss and accuracy of `w` over `samples`.
pub fn evaluate(model: &dyn Model, w: &ModelVector, samples: &[Sample]) -> Result<(f64, f64), FlError> {
    evaluate_iter(model, w, samples.iter())
}

pub fn evaluate_subset(
    model: &dyn Model,
    w: &ModelVector,
    samples: &[Sample],
    indices: &[usize],
) -> Result<(f64, f64), FlError> {
    evaluate_iter(model, w, indices.iter().map(|&i| &samples[i]))
}

fn evaluate_iter<'a>(
    model: &dyn Model,
    w: &ModelVector,
    samples: impl Iterator<Item = &'a Sample>,
) -> Result<(f64, f64), FlError> {
    let (mut loss, mut hits, mut n) = (0.0, 0usize, 0usize);
    for s in samples {
        loss += model.loss(&w.weights, s);
        hits += usize::from(model.predict(&w.weights, &s.x) == s.label);
        n += 1;
    }
    if n == 0 {
        return Err(FlError::EmptyDataset);
    }
    Ok((loss / n as f64, hits as f64 / n as f64))
}
