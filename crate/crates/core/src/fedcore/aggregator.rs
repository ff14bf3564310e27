use super::comm::{CommMessage, MessageKind};
use super::model::ModelVector;
use super::{aggregate, FlError};
use crate::topology::EndpointId;
use std::collections::BTreeMap;

/// Where the aggregator's outgoing messages go. The simulator implements
/// this by fragmenting and injecting packets; tests collect into a Vec.
pub trait Transport {
    fn send(&mut self, to: EndpointId, msg: CommMessage);
}

impl Transport for Vec<(EndpointId, CommMessage)> {
    fn send(&mut self, to: EndpointId, msg: CommMessage) {
        self.push((to, msg));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AckStatus {
    GlobalModelRecv,
    LocalModelRecv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkerRecord {
    pub n_k: usize,
    pub epochs: u32,
    pub status: Option<AckStatus>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Unstarted,
    /// global model out, waiting for every GLOBAL_MODEL_RECV
    Distributing,
    /// training requested, waiting for every LOCAL_MODEL
    Collecting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggEvent {
    None,
    /// the barrier released: models averaged and the new global broadcast
    Aggregated { round: u32 },
    /// every worker acknowledged this round's global model
    RoundComplete { round: u32 },
}

#[derive(Debug, Clone)]
pub struct AggregatorState {
    pub registry: BTreeMap<EndpointId, WorkerRecord>,
    pub round: u32,
    pub global: ModelVector,
    pub fresh: BTreeMap<EndpointId, ModelVector>,
    pub batch_size: usize,
    phase: Phase,
}

impl AggregatorState {
    pub fn new(initial: ModelVector, batch_size: usize) -> AggregatorState {
        AggregatorState {
            registry: BTreeMap::new(),
            round: 0,
            global: initial,
            fresh: BTreeMap::new(),
            batch_size,
            phase: Phase::Unstarted,
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn register(&mut self, id: EndpointId, n_k: usize, epochs: u32) -> Result<(), FlError> {
        if n_k == 0 {
            return Err(FlError::EmptyShard(id.0));
        }
        if self.registry.contains_key(&id) {
            return Err(FlError::AlreadyRegistered(id.0));
        }
        self.registry.insert(
            id,
            WorkerRecord {
                n_k,
                epochs,
                status: None,
            },
        );
        Ok(())
    }

    fn all(&self, status: AckStatus) -> bool {
        self.registry.values().all(|r| r.status == Some(status))
    }

    fn broadcast_global(&mut self, transport: &mut dyn Transport) {
        for id in self.registry.keys() {
            transport.send(*id, CommMessage::with_model(MessageKind::GlobalModel, self.round, self.global.clone()));
        }
        self.phase = Phase::Distributing;
    }

    /// Round 1 distributes the initial model; later rounds send training
    /// requests and require every worker to hold the current global model.
    pub fn start_round(&mut self, transport: &mut dyn Transport) -> Result<u32, FlError> {
        if self.registry.is_empty() {
            return Err(FlError::NoWorkers);
        }
        match self.phase {
            Phase::Unstarted => {
                self.round = 1;
                self.broadcast_global(transport);
            }
            Phase::Distributing if self.all(AckStatus::GlobalModelRecv) => {
                self.round += 1;
                self.fresh.clear();
                for (id, rec) in &self.registry {
                    transport.send(*id, CommMessage::train_request(self.round, rec.epochs, self.batch_size));
                }
                self.phase = Phase::Collecting;
            }
            _ => return Err(FlError::Barrier(self.round)),
        }
        Ok(self.round)
    }

    pub fn on_message(
        &mut self,
        from: EndpointId,
        msg: CommMessage,
        transport: &mut dyn Transport,
    ) -> Result<AggEvent, FlError> {
        if !self.registry.contains_key(&from) {
            return Err(FlError::UnknownWorker(from.0));
        }
        match msg.kind {
            MessageKind::GlobalModelRecv => {
                if msg.round != self.round || self.phase != Phase::Distributing {
                    return Ok(AggEvent::None);
                }
                self.registry.get_mut(&from).expect("checked").status = Some(AckStatus::GlobalModelRecv);
                if self.all(AckStatus::GlobalModelRecv) {
                    return Ok(AggEvent::RoundComplete { round: self.round });
                }
                Ok(AggEvent::None)
            }
            MessageKind::LocalModel => {
                transport.send(from, CommMessage::stub(MessageKind::LocalModelRecv, msg.round));
                if msg.round != self.round || self.phase != Phase::Collecting {
                    // stale model from a dropped straggler
                    return Ok(AggEvent::None);
                }
                let model = msg.model.ok_or(FlError::MissingModel(from.0))?;
                self.global.check_dim(&model)?;
                self.fresh.insert(from, model);
                self.registry.get_mut(&from).expect("checked").status = Some(AckStatus::LocalModelRecv);
                if self.all(AckStatus::LocalModelRecv) {
                    self.aggregate_fresh(transport)?;
                    return Ok(AggEvent::Aggregated { round: self.round });
                }
                Ok(AggEvent::None)
            }
            MessageKind::StatusQuery => {
                transport.send(from, CommMessage::stub(MessageKind::StatusReply, self.round));
                Ok(AggEvent::None)
            }
            _ => Ok(AggEvent::None),
        }
    }

    /// Averages whatever fresh models arrived, in registry order, and
    /// broadcasts. Used directly when a round timeout drops stragglers.
    pub fn aggregate_fresh(&mut self, transport: &mut dyn Transport) -> Result<(), FlError> {
        let models: Vec<(&ModelVector, usize)> = self
            .fresh
            .iter()
            .map(|(id, m)| (m, self.registry[id].n_k))
            .collect();
        let mut next = aggregate(&models)?;
        next = next.with_payload_override(self.global.payload_override());
        self.global = next;
        for rec in self.registry.values_mut() {
            rec.status = None;
        }
        self.fresh.clear();
        self.broadcast_global(transport);
        Ok(())
    }
}
