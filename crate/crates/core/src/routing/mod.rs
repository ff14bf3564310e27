//! Per-router forwarding: a min-hop distance-vector baseline and tabular
//! Q-routing agents.
//!
//! Agents learn, per observed flow and next hop, an estimate of the negative
//! delay still to go before the packet leaves the mesh. The receiving router
//! computes the sample for its upstream neighbor (measured hop delay plus its
//! own best estimate) and reports the smoothed value back periodically.

mod agent;
mod baseline;

pub use agent::{AgentSnapshot, EstimateReport, PolicyConfig, PolicyKind, RouterAgent};
pub use baseline::{baseline_next_hop, NextHopTable};

use crate::simnet::{FlowKey, Packet, SimTime};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RoutingError {
    #[error("no refined action for this flow at router {0}")]
    EmptyActionSet(u32),
    #[error("next hop {action} is outside the refined action space of router {router}")]
    ActionOutsideSpace { router: u32, action: u32 },
    #[error("destination router {dst} unreachable from router {router}")]
    Unreachable { router: u32, dst: u32 },
    #[error("invalid policy parameter: {0}")]
    BadPolicy(String),
}

/// Forwarding scheme for federated-learning traffic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Baseline,
    RlGreedy,
    RlSoftmax,
    /// Off-policy: epsilon-greedy behavior, greedy target.
    RlEpsilon,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [
        Protocol::Baseline,
        Protocol::RlGreedy,
        Protocol::RlSoftmax,
        Protocol::RlEpsilon,
    ];

    pub fn policy_kind(self) -> Option<PolicyKind> {
        match self {
            Protocol::Baseline => None,
            Protocol::RlGreedy => Some(PolicyKind::Greedy),
            Protocol::RlSoftmax => Some(PolicyKind::Softmax),
            Protocol::RlEpsilon => Some(PolicyKind::EpsilonGreedyDecay),
        }
    }

    pub fn is_rl(self) -> bool {
        self != Protocol::Baseline
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Baseline => "baseline",
            Protocol::RlGreedy => "rl-greedy",
            Protocol::RlSoftmax => "rl-softmax",
            Protocol::RlEpsilon => "rl-epsilon",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown protocol {s:?}"))
    }
}

/// Reward for one hop: the negative hop delay in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Reward(f64);

impl Reward {
    pub fn from_delay(delay: SimTime) -> Reward {
        Reward(-delay.as_ms())
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Running sum of a packet's rewards; at delivery it is the negative
/// end-to-end delay.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ReturnAccumulator {
    sum_ms: f64,
    hops: u32,
}

impl ReturnAccumulator {
    pub fn add(&mut self, reward: Reward) {
        self.sum_ms += reward.value();
        self.hops += 1;
    }

    pub fn value(&self) -> f64 {
        self.sum_ms
    }

    pub fn hops(&self) -> u32 {
        self.hops
    }
}

/// The agent's observation of a packet: its flow key.
pub fn observe(pkt: &Packet) -> FlowKey {
    pkt.flow
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simnet::PacketKind;
    use crate::topology::{EndpointId, RouterId};

    fn pkt(src: u32, dst: u32) -> Packet {
        Packet {
            id: 0,
            flow: FlowKey::new(EndpointId(src), EndpointId(dst)).unwrap(),
            kind: PacketKind::Background,
            payload_bytes: 100,
            ingress: RouterId(0),
            egress: RouterId(1),
            telemetry: None,
            hop_trace: vec![],
            ttl: 4,
            injected_at: SimTime::ZERO,
            hop_delay: None,
            ret: ReturnAccumulator::default(),
        }
    }

    #[test]
    fn observation_is_the_flow_key() {
        let a = pkt(3, 0);
        let mut b = pkt(3, 0);
        b.id = 9;
        assert_eq!(observe(&a), FlowKey::new(EndpointId(3), EndpointId(0)).unwrap());
        assert_eq!(observe(&a), observe(&b));
        assert_eq!(observe(&pkt(0, 3)), observe(&a).reversed());
        assert_ne!(observe(&pkt(0, 3)), observe(&a));
    }

    #[test]
    fn return_sums_negative_delays() {
        let mut g = ReturnAccumulator::default();
        g.add(Reward::from_delay(SimTime::from_ms(2.5)));
        g.add(Reward::from_delay(SimTime::from_ms(4.0)));
        assert_eq!(g.value(), -6.5);
        assert_eq!(g.hops(), 2);
    }

    #[test]
    fn protocol_names_round_trip() {
        for p in Protocol::ALL {
            assert_eq!(p.as_str().parse::<Protocol>().unwrap(), p);
        }
        assert!("ospf".parse::<Protocol>().is_err());
    }
}
