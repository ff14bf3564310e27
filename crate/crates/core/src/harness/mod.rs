//! Scenario execution, metrics, protocol comparison and presets.

mod compare;
mod config;
mod metrics;
pub mod presets;
mod probe;
mod sweep;
mod world;

pub use compare::{compare, ComparisonEntry, ComparisonReport};
pub use config::{
    derive_seed, BackgroundSection, DataSection, ExperimentConfig, FlSection, NetworkSection, RoutingSection,
    ScenarioTopology, Seeds,
};
pub use metrics::{
    emit_metrics, read_rounds, RoundRow, time_to_target, Diagnostics, FlowSummary, MetricsLog, RoundRecord, TelemetrySample,
    TimelineEntry, TimelineKind, FLOW_HEADER, ROUND_HEADER,
};
pub use probe::{probe_loops, LoopProbe};
pub use sweep::{run_replicates, sweep, SweepRow, SweepSummary};
pub use world::run_experiment;

use crate::datagen::DataError;
use crate::fedcore::FlError;
use crate::routing::RoutingError;
use crate::simnet::SimError;
use crate::topology::TopologyError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("topology: {0}")]
    Topology(#[from] TopologyError),
    #[error("data: {0}")]
    Data(#[from] DataError),
    #[error("federated learning: {0}")]
    Fl(#[from] FlError),
    #[error("routing fault: {0}")]
    Routing(#[from] RoutingError),
    #[error("simulation: {0}")]
    Sim(#[from] SimError),
    #[error("runtime fault: {0}")]
    Runtime(String),
    #[error("logs are not comparable: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// 1 for anything wrong with the inputs, 2 for faults during a run.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_)
            | HarnessError::Topology(_)
            | HarnessError::Data(_)
            | HarnessError::Mismatch(_)
            | HarnessError::Fl(FlError::BadConfig(_)) => 1,
            _ => 2,
        }
    }
}
