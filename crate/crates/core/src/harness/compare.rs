use super::metrics::{time_to_target, MetricsLog};
use super::HarnessError;
use crate::routing::Protocol;
use crate::simnet::SimTime;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonEntry {
    pub protocol: Protocol,
    pub time_to_target: Option<SimTime>,
    pub total_time: SimTime,
    /// baseline time over this protocol's time; absent if either missed
    pub speedup: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub target_loss: f64,
    pub baseline: Protocol,
    pub entries: Vec<ComparisonEntry>,
    /// every log has exactly the baseline's per-round losses
    pub curves_equal: bool,
}

impl ComparisonReport {
    pub fn entry(&self, p: Protocol) -> Option<&ComparisonEntry> {
        self.entries.iter().find(|e| e.protocol == p)
    }
}

pub fn compare(
    logs: &BTreeMap<Protocol, MetricsLog>,
    baseline: Protocol,
    target_loss: f64,
) -> Result<ComparisonReport, HarnessError> {
    let base = logs
        .get(&baseline)
        .ok_or_else(|| HarnessError::Mismatch(format!("no {baseline} log to compare against")))?;
    for (p, log) in logs {
        if log.fingerprint != base.fingerprint {
            return Err(HarnessError::Mismatch(format!(
                "{p} ran a different scenario than {baseline} (data, model, network or seeds differ)"
            )));
        }
    }
    let base_time = time_to_target(base, target_loss);
    let base_losses = base.losses();
    let mut curves_equal = true;
    let entries = logs
        .iter()
        .map(|(p, log)| {
            curves_equal &= log.losses() == base_losses;
            let t = time_to_target(log, target_loss);
            let speedup = match (base_time, t) {
                (Some(b), Some(t)) if t.0 > 0 => Some(b.0 as f64 / t.0 as f64),
                _ => None,
            };
            ComparisonEntry {
                protocol: *p,
                time_to_target: t,
                total_time: log.total_time(),
                speedup,
            }
        })
        .collect();
    Ok(ComparisonReport {
        target_loss,
        baseline,
        entries,
        curves_equal,
    })
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "target loss {}  (baseline: {})", self.target_loss, self.baseline)?;
        writeln!(f, "{:<12} {:>14} {:>10} {:>14} {:>8}", "protocol", "to target ms", "minutes", "total ms", "speedup")?;
        for e in &self.entries {
            let (ms, min) = match e.time_to_target {
                Some(t) => (format!("{:.1}", t.as_ms()), format!("{:.2}", t.as_minutes())),
                None => ("not reached".to_string(), "-".to_string()),
            };
            let sp = e.speedup.map(|s| format!("{s:.3}")).unwrap_or_else(|| "-".into());
            writeln!(
                f,
                "{:<12} {:>14} {:>10} {:>14.1} {:>8}",
                e.protocol.as_str(),
                ms,
                min,
                e.total_time.as_ms(),
                sp
            )?;
        }
        write!(f, "iteration curves identical: {}", self.curves_equal)
    }
}
