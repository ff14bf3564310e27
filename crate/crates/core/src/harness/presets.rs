//! Shipped scenarios. Each preset file holds one fully specified scenario;
//! the variants of an experiment family are derived from it here.

use super::{ExperimentConfig, HarnessError};
use std::collections::BTreeMap;

const SOURCES: [(&str, &str); 4] = [
    ("fig7_convergence", include_str!("../../presets/fig7_convergence.toml")),
    ("fig8_stragglers", include_str!("../../presets/fig8_stragglers.toml")),
    ("fig12_distributions", include_str!("../../presets/fig12_distributions.toml")),
    ("fig13_scalability", include_str!("../../presets/fig13_scalability.toml")),
];

/// Edge routers used for worker placement, in round-robin order.
const SCALING_EDGES: [&str; 5] = ["R9", "R10", "R2", "R8", "R7"];
const DISTRIBUTION_EDGES: [&str; 3] = ["R9", "R10", "R2"];
pub const DISTRIBUTIONS: [[usize; 3]; 3] = [[3, 3, 3], [2, 5, 2], [2, 4, 3]];
pub const WORKER_COUNTS: [usize; 6] = [9, 10, 11, 12, 13, 14];
const SAMPLES_PER_WORKER: usize = 1000;

pub fn names() -> Vec<&'static str> {
    SOURCES.iter().map(|(n, _)| *n).collect()
}

pub fn source(name: &str) -> Option<&'static str> {
    SOURCES.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn load(name: &str) -> Result<ExperimentConfig, HarnessError> {
    let text = source(name).ok_or_else(|| {
        HarnessError::Config(format!("unknown preset {name:?}; known: {}", names().join(", ")))
    })?;
    ExperimentConfig::from_toml(text)
}

/// Replaces the worker endpoints with `W1..Wn` placed as `(router, count)`.
pub fn place_workers(cfg: &mut ExperimentConfig, placement: &[(&str, usize)]) {
    let old = cfg.worker_names();
    cfg.topology.hosts.retain(|h, _| !old.contains(h));
    let mut i = 1;
    for (router, count) in placement {
        for _ in 0..*count {
            cfg.topology.hosts.insert(format!("W{i}"), router.to_string());
            i += 1;
        }
    }
    cfg.topology.workers.clear();
}

fn plain(cfg: &ExperimentConfig) -> ExperimentConfig {
    let mut c = cfg.clone();
    for e in cfg.background_endpoints() {
        c.topology.hosts.remove(e);
    }
    c.background.clear();
    c
}

/// Names and configs of every variant of a preset, plain before congested.
pub fn variants(name: &str) -> Result<Vec<(String, ExperimentConfig)>, HarnessError> {
    let base = load(name)?;
    let mut dims: Vec<(String, ExperimentConfig)> = Vec::new();
    match name {
        "fig8_stragglers" => {
            for fraction in [0.5, 0.9] {
                for rho in [0.0, base.fl.rho] {
                    let mut c = base.clone();
                    c.fl.rho = rho;
                    if let Some(s) = c.fl.stragglers.as_mut() {
                        s.fraction = fraction;
                    }
                    dims.push((format!("rho{rho}-s{}", (fraction * 100.0) as u32), c));
                }
            }
        }
        "fig12_distributions" => {
            for d in DISTRIBUTIONS {
                let mut c = base.clone();
                let placement: Vec<(&str, usize)> = DISTRIBUTION_EDGES.iter().copied().zip(d).collect();
                place_workers(&mut c, &placement);
                dims.push((format!("{}-{}-{}", d[0], d[1], d[2]), c));
            }
        }
        "fig13_scalability" => {
            for k in WORKER_COUNTS {
                dims.push((format!("{k}w"), scaled(&base, k)));
            }
        }
        _ => dims.push(("default".into(), base)),
    }
    let mut out = Vec::new();
    for (dim, c) in &dims {
        let mut p = plain(c);
        p.name = format!("{name}/{dim}/plain");
        out.push((p.name.clone(), p));
    }
    for (dim, c) in dims {
        let mut c = c;
        c.name = format!("{name}/{dim}/congested");
        out.push((c.name.clone(), c));
    }
    Ok(out)
}

/// `k` workers round-robin over the scaling edge routers, a fixed number of
/// samples each.
pub fn scaled(base: &ExperimentConfig, k: usize) -> ExperimentConfig {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..k {
        *counts.entry(i % SCALING_EDGES.len()).or_default() += 1;
    }
    let placement: Vec<(&str, usize)> = counts.iter().map(|(i, n)| (SCALING_EDGES[*i], *n)).collect();
    let mut c = base.clone();
    place_workers(&mut c, &placement);
    c.data.samples = SAMPLES_PER_WORKER * k;
    c
}

/// Looks up one variant by its full name.
pub fn variant(full: &str) -> Result<ExperimentConfig, HarnessError> {
    let preset = full.split('/').next().unwrap_or(full);
    variants(preset)?
        .into_iter()
        .find(|(n, _)| n == full)
        .map(|(_, c)| c)
        .ok_or_else(|| HarnessError::Config(format!("unknown variant {full:?}")))
}
