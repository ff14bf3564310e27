use super::model::{Model, ModelVector};
use super::sgd::local_sgd_step;
use super::{FlError, TrainingConfig};
use crate::datagen::Sample;
use crate::simnet::SimTime;
use crate::topology::{EndpointId, RouterId};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkerStatus {
    Idle,
    TrainingStarted,
    TrainingFinished,
}

#[derive(Debug, Clone)]
pub struct WorkerState {
    pub id: EndpointId,
    pub router: RouterId,
    pub status: WorkerStatus,
    pub local: ModelVector,
    /// regularization anchor: the global model of the current round
    pub anchor: ModelVector,
    /// indices into the shared sample list
    pub shard: Vec<usize>,
    pub epochs: u32,
    rng: ChaCha8Rng,
}

impl WorkerState {
    pub fn new(
        id: EndpointId,
        router: RouterId,
        shard: Vec<usize>,
        epochs: u32,
        initial: ModelVector,
        seed: u64,
    ) -> Result<WorkerState, FlError> {
        if shard.is_empty() {
            return Err(FlError::EmptyShard(id.0));
        }
        if epochs == 0 {
            return Err(FlError::BadConfig(format!("worker {} has zero local epochs", id.0)));
        }
        Ok(WorkerState {
            id,
            router,
            status: WorkerStatus::Idle,
            anchor: initial.clone(),
            local: initial,
            shard,
            epochs,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn n_k(&self) -> usize {
        self.shard.len()
    }

    pub fn batches_per_epoch(&self, batch: usize) -> usize {
        self.shard.len().div_ceil(batch.max(1))
    }

    /// Simulated time one round of local training occupies.
    pub fn compute_time(&self, batch: usize, per_batch_ms: f64) -> SimTime {
        SimTime::from_ms(self.epochs as f64 * self.batches_per_epoch(batch) as f64 * per_batch_ms)
    }

    pub fn receive_global(&mut self, global: &ModelVector) -> Result<(), FlError> {
        if self.status != WorkerStatus::Idle {
            return Err(FlError::BadTransition {
                worker: self.id.0,
                from: self.status,
                to: WorkerStatus::Idle,
            });
        }
        self.local = global.clone();
        self.anchor = global.clone();
        Ok(())
    }

    fn transition(&mut self, from: WorkerStatus, to: WorkerStatus) -> Result<(), FlError> {
        if self.status != from {
            return Err(FlError::BadTransition {
                worker: self.id.0,
                from: self.status,
                to,
            });
        }
        self.status = to;
        Ok(())
    }

    pub fn start_training(&mut self) -> Result<(), FlError> {
        self.transition(WorkerStatus::Idle, WorkerStatus::TrainingStarted)
    }

    /// Runs the `epochs` passes over the shuffled shard and marks training
    /// finished.
    pub fn finish_training(
        &mut self,
        model: &dyn Model,
        samples: &[Sample],
        cfg: &TrainingConfig,
    ) -> Result<ModelVector, FlError> {
        if self.status != WorkerStatus::TrainingStarted {
            return Err(FlError::BadTransition {
                worker: self.id.0,
                from: self.status,
                to: WorkerStatus::TrainingFinished,
            });
        }
        let mut w = self.local.clone();
        let mut order = self.shard.clone();
        for _ in 0..self.epochs {
            order.shuffle(&mut self.rng);
            for chunk in order.chunks(cfg.batch_size) {
                let batch: Vec<&Sample> = chunk.iter().map(|&i| &samples[i]).collect();
                w = local_sgd_step(model, &w, &batch, cfg.eta, cfg.rho, &self.anchor)?;
            }
        }
        self.local = w;
        self.status = WorkerStatus::TrainingFinished;
        Ok(self.local.clone())
    }

    /// The aggregator confirmed receipt of the local model.
    pub fn acknowledged(&mut self) -> Result<(), FlError> {
        self.transition(WorkerStatus::TrainingFinished, WorkerStatus::Idle)
    }
}

/// Start and finish in one call, for callers without a clock.
pub fn run_local_training(
    ws: &mut WorkerState,
    model: &dyn Model,
    samples: &[Sample],
    cfg: &TrainingConfig,
) -> Result<ModelVector, FlError> {
    ws.start_training()?;
    ws.finish_training(model, samples, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::generate;
    use crate::fedcore::model::{Logistic, SquaredDistance};

    fn cfg(rho: f64, batch: usize) -> TrainingConfig {
        TrainingConfig {
            eta: 0.1,
            rho,
            batch_size: batch,
            max_rounds: 1,
            target_loss: None,
            batch_compute_ms: 10.0,
        }
    }

    fn worker(shard: Vec<usize>, epochs: u32, w: ModelVector) -> WorkerState {
        WorkerState::new(EndpointId(0), RouterId(0), shard, epochs, w, 7).unwrap()
    }

    #[test]
    fn single_batch_single_epoch_is_one_step() {
        let m = SquaredDistance { dim: 1 };
        let data = vec![Sample { x: vec![2.0], label: 0 }];
        let mut ws = worker(vec![0], 1, ModelVector::new(vec![1.0]));
        ws.local = ModelVector::new(vec![0.0]);
        let out = run_local_training(&mut ws, &m, &data, &cfg(0.5, 1)).unwrap();
        assert!((out.weights[0] - 0.5).abs() < 1e-12);
        assert_eq!(ws.status, WorkerStatus::TrainingFinished);
    }

    #[test]
    fn status_machine_rejects_skips() {
        let mut ws = worker(vec![0], 1, ModelVector::zeros(1));
        assert!(ws.acknowledged().is_err());
        ws.start_training().unwrap();
        assert!(ws.start_training().is_err());
        assert!(ws.receive_global(&ModelVector::zeros(1)).is_err());
    }

    #[test]
    fn more_epochs_more_change_and_stragglers_stay_closer() {
        let ds = generate(200, 4, 3, 3.0, 1).unwrap();
        let m = Logistic::new(4, 3);
        let g = ModelVector::new(m.init(3));
        let shard: Vec<usize> = (0..200).collect();
        let mut one = worker(shard.clone(), 1, g.clone());
        let mut five = worker(shard, 5, g.clone());
        let c = cfg(0.5, 20);
        let a = run_local_training(&mut one, &m, &ds.samples, &c).unwrap();
        let b = run_local_training(&mut five, &m, &ds.samples, &c).unwrap();
        assert_ne!(a, b);
        assert!(a.distance(&g) < b.distance(&g));
    }

    #[test]
    fn compute_time_counts_short_last_batch() {
        let ws = worker((0..250).collect(), 3, ModelVector::zeros(1));
        assert_eq!(ws.batches_per_epoch(100), 3);
        assert_eq!(ws.compute_time(100, 10.0), SimTime::from_ms(90.0));
    }
}
