//! Deterministic discrete-event network engine.
//!
//! Time is kept in integer nanoseconds so that delays computed by the link
//! model and delays recovered from telemetry timestamps agree bit for bit.

mod background;
mod link;
mod packet;

pub use background::{spawn_background, BackgroundFlowSpec, BackgroundRoute, BackgroundSource};
pub use link::{Jitter, LinkState, LinkStats, TransmitOutcome};
pub use packet::{FlowKey, Packet, PacketKind, TelemetryHeader, TraceRecord};

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::ops::{Add, AddAssign, Sub};
use thiserror::Error;

/// Simulated time or duration, nanosecond resolution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn from_ms(ms: f64) -> SimTime {
        debug_assert!(ms >= 0.0 && ms.is_finite(), "negative or non-finite time {ms}");
        SimTime((ms * 1e6).round() as u64)
    }

    pub fn from_secs(s: f64) -> SimTime {
        SimTime::from_ms(s * 1e3)
    }

    pub fn as_ms(self) -> f64 {
        self.0 as f64 / 1e6
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 / 1e9
    }

    pub fn as_minutes(self) -> f64 {
        self.0 as f64 / 6e10
    }

    pub fn saturating_sub(self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(other.0))
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        self.0 += rhs.0;
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ms", self.as_ms())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("event posted at {at} but clock is already at {now}")]
    PastEvent { at: SimTime, now: SimTime },
    #[error("packet {0} already carries a telemetry header")]
    DoubleStamp(u64),
    #[error("packet {0} has no telemetry header")]
    MissingTelemetry(u64),
    #[error("telemetry timestamp {sent} is after receive time {now}")]
    TelemetryFromFuture { sent: SimTime, now: SimTime },
    #[error("flow source and destination must differ")]
    DegenerateFlow,
}

struct Entry<E> {
    at: SimTime,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.at == other.at && self.seq == other.seq
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    // min-heap on (time, insertion sequence)
    fn cmp(&self, other: &Self) -> Ordering {
        other.at.cmp(&self.at).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Event queue and simulation clock. Events at equal times run in the order
/// they were posted.
pub struct Scheduler<E> {
    now: SimTime,
    seq: u64,
    heap: BinaryHeap<Entry<E>>,
}

impl<E> Default for Scheduler<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> Scheduler<E> {
    pub fn new() -> Self {
        Scheduler {
            now: SimTime::ZERO,
            seq: 0,
            heap: BinaryHeap::new(),
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn post(&mut self, at: SimTime, event: E) -> Result<(), SimError> {
        if at < self.now {
            return Err(SimError::PastEvent { at, now: self.now });
        }
        self.heap.push(Entry {
            at,
            seq: self.seq,
            event,
        });
        self.seq += 1;
        Ok(())
    }

    pub fn post_in(&mut self, delay: SimTime, event: E) {
        let at = self.now + delay;
        self.heap.push(Entry {
            at,
            seq: self.seq,
            event,
        });
        self.seq += 1;
    }

    /// Removes the earliest event and advances the clock to it.
    pub fn pop(&mut self) -> Option<(SimTime, E)> {
        let entry = self.heap.pop()?;
        self.now = entry.at;
        Some((entry.at, entry.event))
    }

    /// Removes every pending event, in no particular order.
    pub fn drain(&mut self) -> impl Iterator<Item = E> + '_ {
        self.heap.drain().map(|e| e.event)
    }

    pub fn pending(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_times_run_in_posting_order() {
        let mut s = Scheduler::new();
        s.post(SimTime(10), "a").unwrap();
        s.post(SimTime(10), "b").unwrap();
        s.post(SimTime(5), "c").unwrap();
        let order: Vec<_> = std::iter::from_fn(|| s.pop().map(|(_, e)| e)).collect();
        assert_eq!(order, vec!["c", "a", "b"]);
    }

    #[test]
    fn event_at_now_runs_before_later_events() {
        let mut s = Scheduler::new();
        s.post(SimTime(100), 1).unwrap();
        s.post(SimTime(50), 0).unwrap();
        assert_eq!(s.pop(), Some((SimTime(50), 0)));
        s.post(SimTime(50), 2).unwrap();
        assert_eq!(s.pop(), Some((SimTime(50), 2)));
        assert_eq!(s.pop(), Some((SimTime(100), 1)));
    }

    #[test]
    fn past_events_are_rejected() {
        let mut s = Scheduler::new();
        s.post(SimTime::from_ms(2.0), ()).unwrap();
        s.pop();
        let err = s.post(SimTime::from_ms(1.0), ()).unwrap_err();
        assert!(matches!(err, SimError::PastEvent { .. }));
    }

    #[test]
    fn time_conversions() {
        assert_eq!(SimTime::from_ms(2.5).0, 2_500_000);
        assert_eq!(SimTime::from_secs(1.16).as_ms(), 1160.0);
        assert_eq!(SimTime::from_secs(60.0).as_minutes(), 1.0);
    }
}
