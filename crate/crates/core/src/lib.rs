//! Discrete-event simulation of federated learning over multi-hop wireless
//! mesh networks.
//!
//! Routers forward federated-learning model traffic either with a min-hop
//! distance-vector baseline or with per-router Q-routing agents that learn
//! delay-minimum next hops from in-band telemetry. The harness runs
//! regularized local SGD rounds over the simulated network and records
//! iteration and wall-clock convergence.

pub mod topology;
pub mod routing;
pub mod simnet;
pub mod datagen;
pub mod fedcore;
pub mod harness;
