use super::metrics::{time_to_target, MetricsLog};
use super::{presets, run_experiment, ExperimentConfig, HarnessError};
use crate::routing::Protocol;
use crate::simnet::SimTime;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub variant: String,
    pub protocol: Protocol,
    pub replicate: u32,
    pub time_to_target: Option<SimTime>,
    pub total_time: SimTime,
    pub rounds: usize,
    pub final_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub variant: String,
    pub protocol: Protocol,
    /// mean over replicates that reached the target
    pub mean_time_ms: Option<f64>,
    pub reached: usize,
    pub replicates: usize,
}

/// Runs every (protocol, replicate) arm of `cfg` in parallel. Replicate `r`
/// uses the seeds derived for `r`; every protocol sees the same seeds.
pub fn run_replicates(
    cfg: &ExperimentConfig,
    protocols: &[Protocol],
    replicates: u32,
) -> Result<Vec<(Protocol, u32, MetricsLog)>, HarnessError> {
    let arms: Vec<(Protocol, u32)> = protocols
        .iter()
        .flat_map(|p| (0..replicates).map(move |r| (*p, r)))
        .collect();
    arms.par_iter()
        .map(|&(p, r)| {
            let mut c = cfg.with_protocol(p);
            c.seeds = cfg.seeds.replicate(r);
            run_experiment(&c).map(|log| (p, r, log))
        })
        .collect()
}

/// All variants of a preset under each protocol.
pub fn sweep(
    preset: &str,
    replicates: u32,
    protocols: &[Protocol],
) -> Result<(Vec<SweepRow>, Vec<SweepSummary>), HarnessError> {
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for (variant, cfg) in presets::variants(preset)? {
        let runs = run_replicates(&cfg, protocols, replicates)?;
        for p in protocols {
            let mine: Vec<&(Protocol, u32, MetricsLog)> = runs.iter().filter(|(q, _, _)| q == p).collect();
            let mut reached = Vec::new();
            for (_, r, log) in &mine {
                let t = cfg.fl.target_loss.and_then(|x| time_to_target(log, x));
                if let Some(t) = t {
                    reached.push(t.as_ms());
                }
                rows.push(SweepRow {
                    variant: variant.clone(),
                    protocol: *p,
                    replicate: *r,
                    time_to_target: t,
                    total_time: log.total_time(),
                    rounds: log.rounds.len(),
                    final_loss: log.rounds.last().map(|x| x.loss).unwrap_or(f64::NAN),
                });
            }
            summary.push(SweepSummary {
                variant: variant.clone(),
                protocol: *p,
                mean_time_ms: (!reached.is_empty()).then(|| reached.iter().sum::<f64>() / reached.len() as f64),
                reached: reached.len(),
                replicates: mine.len(),
            });
        }
    }
    Ok((rows, summary))
}
