use super::{SimError, SimTime};
use crate::routing::ReturnAccumulator;
use crate::topology::{EndpointId, RouterId};
use serde::{Deserialize, Serialize};

/// Source and destination endpoint of a packet; the agents' observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FlowKey {
    pub src: EndpointId,
    pub dst: EndpointId,
}

impl FlowKey {
    pub fn new(src: EndpointId, dst: EndpointId) -> Result<FlowKey, SimError> {
        if src == dst {
            return Err(SimError::DegenerateFlow);
        }
        Ok(FlowKey { src, dst })
    }

    pub fn reversed(self) -> FlowKey {
        FlowKey {
            src: self.dst,
            dst: self.src,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TelemetryHeader {
    pub sender: RouterId,
    pub sent_at: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketKind {
    /// Fragment of a federated-learning message.
    Fl { message: u64, fragment: u32 },
    Background,
}

#[derive(Debug, Clone)]
pub struct Packet {
    pub id: u64,
    pub flow: FlowKey,
    pub kind: PacketKind,
    pub payload_bytes: u32,
    pub ingress: RouterId,
    pub egress: RouterId,
    pub telemetry: Option<TelemetryHeader>,
    pub hop_trace: Vec<(RouterId, SimTime)>,
    pub ttl: u32,
    pub injected_at: SimTime,
    /// Delay of the hop in flight as computed by the link model.
    pub hop_delay: Option<SimTime>,
    pub ret: ReturnAccumulator,
}

impl Packet {
    pub fn is_fl(&self) -> bool {
        matches!(self.kind, PacketKind::Fl { .. })
    }

    /// Pushes a telemetry header carrying the departure router and time.
    pub fn stamp_telemetry(&mut self, router: RouterId, now: SimTime) -> Result<(), SimError> {
        if self.telemetry.is_some() {
            return Err(SimError::DoubleStamp(self.id));
        }
        self.telemetry = Some(TelemetryHeader {
            sender: router,
            sent_at: now,
        });
        Ok(())
    }

    /// Removes the telemetry header and returns the one-hop delay it measures.
    pub fn pop_telemetry(&mut self, now: SimTime) -> Result<(SimTime, TelemetryHeader), SimError> {
        let header = self.telemetry.take().ok_or(SimError::MissingTelemetry(self.id))?;
        if header.sent_at > now {
            return Err(SimError::TelemetryFromFuture {
                sent: header.sent_at,
                now,
            });
        }
        Ok((now - header.sent_at, header))
    }

    /// True when some router appears more than once in the hop trace.
    pub fn revisited_router(&self) -> bool {
        let mut seen: Vec<RouterId> = self.hop_trace.iter().map(|(r, _)| *r).collect();
        seen.sort();
        seen.windows(2).any(|w| w[0] == w[1])
    }
}

/// One line of the optional per-packet trace dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub packet: u64,
    pub hop: usize,
    pub router: String,
    pub arrival_ms: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn packet() -> Packet {
        Packet {
            id: 7,
            flow: FlowKey::new(EndpointId(0), EndpointId(1)).unwrap(),
            kind: PacketKind::Background,
            payload_bytes: 1500,
            ingress: RouterId(0),
            egress: RouterId(1),
            telemetry: None,
            hop_trace: Vec::new(),
            ttl: 16,
            injected_at: SimTime::ZERO,
            hop_delay: None,
            ret: ReturnAccumulator::default(),
        }
    }

    #[test]
    fn stamp_then_pop_measures_the_hop() {
        let mut p = packet();
        p.stamp_telemetry(RouterId(1), SimTime::from_ms(10.0)).unwrap();
        assert_eq!(
            p.telemetry,
            Some(TelemetryHeader {
                sender: RouterId(1),
                sent_at: SimTime::from_ms(10.0)
            })
        );
        let (delay, header) = p.pop_telemetry(SimTime::from_ms(12.5)).unwrap();
        assert_eq!(delay.as_ms(), 2.5);
        assert_eq!(header.sender, RouterId(1));
        assert!(p.telemetry.is_none());
    }

    #[test]
    fn pop_at_stamp_time_is_zero() {
        let mut p = packet();
        p.stamp_telemetry(RouterId(1), SimTime::from_ms(10.0)).unwrap();
        assert_eq!(p.pop_telemetry(SimTime::from_ms(10.0)).unwrap().0, SimTime::ZERO);
    }

    #[test]
    fn double_stamp_and_missing_header_are_errors() {
        let mut p = packet();
        p.stamp_telemetry(RouterId(1), SimTime::from_ms(1.0)).unwrap();
        assert_eq!(
            p.stamp_telemetry(RouterId(1), SimTime::from_ms(2.0)),
            Err(SimError::DoubleStamp(7))
        );
        let mut q = packet();
        assert_eq!(q.pop_telemetry(SimTime::from_ms(1.0)).unwrap_err(), SimError::MissingTelemetry(7));
    }

    #[test]
    fn degenerate_flow_is_rejected() {
        assert!(FlowKey::new(EndpointId(3), EndpointId(3)).is_err());
    }
}
