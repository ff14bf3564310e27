use super::HarnessError;
use crate::routing::{AgentSnapshot, Protocol};
use crate::simnet::{SimTime, TraceRecord};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    pub start: SimTime,
    pub end: SimTime,
    pub loss: f64,
    pub accuracy: f64,
    /// model delivery delay per worker: downlink in round 1, uplink after
    pub worker_e2e_ms: BTreeMap<String, f64>,
    pub tau_max_ms: f64,
    pub mean_e2e_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSummary {
    pub flow: String,
    pub fl: bool,
    pub packets: u64,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub p99_ms: f64,
    /// mean of the negated per-packet return at delivery
    pub mean_return_ms: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub events: u64,
    pub injected: u64,
    pub delivered: u64,
    pub dropped_ttl: u64,
    pub dropped_queue: u64,
    pub alive_at_end: u64,
    pub retransmissions: u64,
    pub telemetry_hops: u64,
    pub telemetry_mismatches: u64,
    /// packets whose hop trace revisits a router
    pub loops: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimelineKind {
    TrainStart,
    TrainDone,
    LocalModelDelivered,
    GlobalModelDelivered,
    Aggregated,
    RoundComplete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub at: SimTime,
    pub round: u32,
    pub worker: Option<String>,
    pub kind: TimelineKind,
}

/// Delay of one hop as computed by the link model and as recovered from the
/// telemetry header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TelemetrySample {
    pub packet: u64,
    pub engine: SimTime,
    pub measured: SimTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsLog {
    pub name: String,
    pub protocol: Protocol,
    pub fingerprint: String,
    pub rounds: Vec<RoundRecord>,
    pub flows: Vec<FlowSummary>,
    pub diagnostics: Diagnostics,
    pub timeline: Vec<TimelineEntry>,
    pub snapshots: Vec<(u32, Vec<AgentSnapshot>)>,
    pub telemetry: Vec<TelemetrySample>,
    pub trace: Vec<TraceRecord>,
}

impl MetricsLog {
    pub fn empty(name: &str, protocol: Protocol, fingerprint: String) -> MetricsLog {
        MetricsLog {
            name: name.to_string(),
            protocol,
            fingerprint,
            rounds: Vec::new(),
            flows: Vec::new(),
            diagnostics: Diagnostics::default(),
            timeline: Vec::new(),
            snapshots: Vec::new(),
            telemetry: Vec::new(),
            trace: Vec::new(),
        }
    }

    pub fn losses(&self) -> Vec<f64> {
        self.rounds.iter().map(|r| r.loss).collect()
    }

    pub fn total_time(&self) -> SimTime {
        self.rounds.last().map(|r| r.end).unwrap_or(SimTime::ZERO)
    }
}

/// End time of the first round whose loss is at or below `target`.
pub fn time_to_target(log: &MetricsLog, target: f64) -> Option<SimTime> {
    log.rounds.iter().find(|r| r.loss <= target).map(|r| r.end)
}

pub const ROUND_HEADER: [&str; 7] = ["round", "start_ms", "end_ms", "loss", "accuracy", "tau_max_ms", "mean_e2e_ms"];
pub const FLOW_HEADER: [&str; 7] = ["flow", "packets", "mean_ms", "p50_ms", "p95_ms", "p99_ms", "mean_return_ms"];

/// Writes `rounds.csv` and `flows.csv` into `dir`; returns the two paths.
pub fn emit_metrics(log: &MetricsLog, dir: &Path) -> Result<(std::path::PathBuf, std::path::PathBuf), HarnessError> {
    std::fs::create_dir_all(dir)?;
    let rounds = dir.join("rounds.csv");
    let mut w = csv::Writer::from_path(&rounds)?;
    w.write_record(ROUND_HEADER)?;
    for r in &log.rounds {
        w.write_record([
            r.round.to_string(),
            r.start.as_ms().to_string(),
            r.end.as_ms().to_string(),
            r.loss.to_string(),
            r.accuracy.to_string(),
            r.tau_max_ms.to_string(),
            r.mean_e2e_ms.to_string(),
        ])?;
    }
    w.flush()?;

    let flows = dir.join("flows.csv");
    let mut w = csv::Writer::from_path(&flows)?;
    w.write_record(FLOW_HEADER)?;
    for f in &log.flows {
        w.write_record([
            f.flow.clone(),
            f.packets.to_string(),
            f.mean_ms.to_string(),
            f.p50_ms.to_string(),
            f.p95_ms.to_string(),
            f.p99_ms.to_string(),
            f.mean_return_ms.to_string(),
        ])?;
    }
    w.flush()?;
    Ok((rounds, flows))
}

/// (round, start_ms, end_ms, loss, accuracy, tau_max_ms, mean_e2e_ms)
pub type RoundRow = (u32, f64, f64, f64, f64, f64, f64);

/// Reads back the per-round rows written by [`emit_metrics`].
pub fn read_rounds(path: &Path) -> Result<Vec<RoundRow>, HarnessError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

/// Nearest-rank percentile of an ascending slice.
pub(crate) fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_with(losses: &[f64]) -> MetricsLog {
        let mut log = MetricsLog::empty("t", Protocol::Baseline, String::new());
        for (i, l) in losses.iter().enumerate() {
            log.rounds.push(RoundRecord {
                round: i as u32 + 1,
                start: SimTime::from_ms(i as f64 * 100.0),
                end: SimTime::from_ms((i + 1) as f64 * 100.0),
                loss: *l,
                accuracy: 0.5,
                worker_e2e_ms: BTreeMap::new(),
                tau_max_ms: 1.0,
                mean_e2e_ms: 1.0,
            });
        }
        log
    }

    #[test]
    fn target_crossing() {
        let losses: Vec<f64> = (0..30).map(|i| 2.0 - 0.05 * i as f64).collect();
        let log = log_with(&losses);
        assert_eq!(time_to_target(&log, 5.0), Some(SimTime::from_ms(100.0)));
        assert_eq!(time_to_target(&log, 0.0), None);
        // first loss <= 1.2 is 2.0 - 0.05 * 16 at index 16, i.e. round 17
        let want = log.rounds.iter().find(|r| r.loss <= 1.2 + 1e-12).unwrap().round;
        assert_eq!(want, 17);
        assert_eq!(time_to_target(&log, 1.2 + 1e-12), Some(SimTime::from_ms(1700.0)));
    }

    #[test]
    fn csv_round_trip_and_empty_log() {
        let dir = tempfile::tempdir().unwrap();
        let log = log_with(&[2.3, 1.0 / 3.0, 0.1]);
        let (rounds, _) = emit_metrics(&log, dir.path()).unwrap();
        let back = read_rounds(&rounds).unwrap();
        assert_eq!(back.iter().map(|r| r.3).collect::<Vec<_>>(), log.losses());

        let empty = MetricsLog::empty("e", Protocol::Baseline, String::new());
        let (rounds, _) = emit_metrics(&empty, &dir.path().join("e")).unwrap();
        let text = std::fs::read_to_string(rounds).unwrap();
        assert_eq!(text, "round,start_ms,end_ms,loss,accuracy,tau_max_ms,mean_e2e_ms\n");
    }

    #[test]
    fn nearest_rank() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&v, 50.0), 50.0);
        assert_eq!(percentile(&v, 99.0), 99.0);
        assert_eq!(percentile(&[3.0], 95.0), 3.0);
    }
}
