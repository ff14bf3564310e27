use super::HarnessError;
use crate::datagen::{PartitionMode, StragglerSpec};
use crate::fedcore::{ModelKind, TrainingConfig};
use crate::routing::{PolicyConfig, Protocol};
use crate::topology::{LinkSpec, PathMethod, RefineConfig, TopologyConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;

/// Full scenario description, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub topology: ScenarioTopology,
    #[serde(default)]
    pub network: NetworkSection,
    #[serde(default)]
    pub routing: RoutingSection,
    pub fl: FlSection,
    pub data: DataSection,
    #[serde(default)]
    pub background: Vec<BackgroundSection>,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default = "one")]
    pub replicates: u32,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioTopology {
    pub routers: Vec<String>,
    pub links: Vec<LinkSpec>,
    /// endpoint name -> router name
    pub hosts: BTreeMap<String, String>,
    /// endpoint hosting the aggregator
    pub server: String,
    /// worker endpoints; empty means every host other than the server and
    /// the background endpoints
    #[serde(default)]
    pub workers: Vec<String>,
}

impl ScenarioTopology {
    pub fn graph(&self) -> TopologyConfig {
        TopologyConfig {
            routers: self.routers.clone(),
            links: self.links.clone(),
            hosts: self.hosts.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSection {
    pub mtu_bytes: u32,
    /// hop limit; default four times the router count
    pub ttl: Option<u32>,
    pub jitter_ms: f64,
    pub queue_limit: Option<usize>,
    pub retransmit_timeout_ms: f64,
    /// keep a per-hop record of every packet (memory hungry)
    pub trace: bool,
}

impl Default for NetworkSection {
    fn default() -> Self {
        NetworkSection {
            mtu_bytes: 1500,
            ttl: None,
            jitter_ms: 0.0,
            queue_limit: None,
            retransmit_timeout_ms: 200.0,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoutingSection {
    pub protocol: Protocol,
    pub alpha: f64,
    pub epsilon0: f64,
    pub decay_beta: f64,
    pub tau: f64,
    pub report_period_s: f64,
    /// smoothing of neighbor estimates; defaults to `alpha`
    pub smoothing: Option<f64>,
    pub dag_filter: bool,
    pub path_method: Option<PathMethod>,
    pub k: Option<usize>,
}

impl Default for RoutingSection {
    fn default() -> Self {
        RoutingSection {
            protocol: Protocol::Baseline,
            alpha: 0.7,
            epsilon0: 0.5,
            decay_beta: 0.99,
            tau: 2.0,
            report_period_s: 5.0,
            smoothing: None,
            dag_filter: true,
            path_method: None,
            k: None,
        }
    }
}

impl RoutingSection {
    pub fn policy(&self, seed: u64) -> Option<PolicyConfig> {
        let kind = self.protocol.policy_kind()?;
        Some(PolicyConfig {
            kind,
            alpha: self.alpha,
            epsilon0: self.epsilon0,
            decay_beta: self.decay_beta,
            tau: self.tau,
            rng_seed: seed,
        })
    }

    pub fn refine(&self, routers: usize) -> RefineConfig {
        let mut rc = RefineConfig::for_router_count(routers, self.dag_filter);
        if let Some(m) = self.path_method {
            rc.method = m;
        }
        if let Some(k) = self.k {
            rc.k = k;
        }
        rc
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlSection {
    #[serde(default = "default_model")]
    pub model: ModelKind,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    pub eta: f64,
    #[serde(default)]
    pub rho: f64,
    pub batch_size: usize,
    pub local_epochs: u32,
    /// explicit per-worker epochs, in worker order; overrides the rest
    #[serde(default)]
    pub epochs_per_worker: Vec<u32>,
    #[serde(default)]
    pub stragglers: Option<StragglerSpec>,
    pub max_rounds: u32,
    #[serde(default)]
    pub target_loss: Option<f64>,
    pub batch_compute_ms: f64,
    /// transfer size of every model message, replacing dim * 8 + header
    #[serde(default)]
    pub payload_bytes: Option<u64>,
    #[serde(default)]
    pub round_timeout_ms: Option<f64>,
    #[serde(default)]
    pub drop_stragglers: bool,
}

fn default_model() -> ModelKind {
    ModelKind::Logistic
}

fn default_hidden() -> usize {
    32
}

impl FlSection {
    pub fn training(&self) -> TrainingConfig {
        TrainingConfig {
            eta: self.eta,
            rho: self.rho,
            batch_size: self.batch_size,
            max_rounds: self.max_rounds,
            target_loss: self.target_loss,
            batch_compute_ms: self.batch_compute_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub samples: usize,
    pub features: usize,
    pub classes: usize,
    pub separation: f64,
    #[serde(default = "default_partition")]
    pub partition: PartitionMode,
    #[serde(default = "default_dirichlet")]
    pub dirichlet_beta: f64,
}

fn default_partition() -> PartitionMode {
    PartitionMode::Iid
}

fn default_dirichlet() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundSection {
    pub src: String,
    pub dst: String,
    pub rate_pps: f64,
    #[serde(default = "default_bg_bytes")]
    pub packet_bytes: u32,
    /// fixed router path; absent means min-hop forwarding
    #[serde(default)]
    pub path: Option<Vec<String>>,
}

fn default_bg_bytes() -> u32 {
    1500
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Seeds {
    /// jitter and background traffic
    pub sim: u64,
    pub rl: u64,
    /// dataset, partition, straggler choice, batch order
    pub data: u64,
    pub model: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds {
            sim: 1,
            rl: 2,
            data: 3,
            model: 4,
        }
    }
}

impl Seeds {
    pub fn all(seed: u64) -> Seeds {
        Seeds {
            sim: seed,
            rl: seed,
            data: seed,
            model: seed,
        }
    }

    /// Seeds for replicate `r`; replicate 0 keeps the configured values.
    pub fn replicate(self, r: u32) -> Seeds {
        if r == 0 {
            return self;
        }
        let r = r as u64;
        Seeds {
            sim: derive_seed(self.sim, r),
            rl: derive_seed(self.rl, r),
            data: derive_seed(self.data, r),
            model: derive_seed(self.model, r),
        }
    }
}

/// SplitMix64 finalizer over `base` and `salt`; stream separation for
/// derived generators.
pub fn derive_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig, HarnessError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<ExperimentConfig, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        ExperimentConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn with_protocol(&self, protocol: Protocol) -> ExperimentConfig {
        let mut c = self.clone();
        c.routing.protocol = protocol;
        c
    }

    pub fn with_seed(&self, seed: u64) -> ExperimentConfig {
        let mut c = self.clone();
        c.seeds = Seeds::all(seed);
        c
    }

    /// Background endpoints, in config order.
    pub fn background_endpoints(&self) -> Vec<&str> {
        self.background
            .iter()
            .flat_map(|b| [b.src.as_str(), b.dst.as_str()])
            .collect()
    }

    /// Worker endpoint names in registry (name) order.
    pub fn worker_names(&self) -> Vec<String> {
        let mut names: Vec<String> = if self.topology.workers.is_empty() {
            let bg = self.background_endpoints();
            self.topology
                .hosts
                .keys()
                .filter(|h| **h != self.topology.server && !bg.contains(&h.as_str()))
                .cloned()
                .collect()
        } else {
            self.topology.workers.clone()
        };
        names.sort();
        names
    }

    /// Checks everything that can be checked without building the world.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        let hosts = &self.topology.hosts;
        if !hosts.contains_key(&self.topology.server) {
            return bad(format!("server endpoint {:?} has no host attachment", self.topology.server));
        }
        let workers = self.worker_names();
        if workers.is_empty() {
            return bad("no worker endpoints".into());
        }
        for w in &workers {
            if !hosts.contains_key(w) {
                return bad(format!("worker endpoint {w:?} has no host attachment"));
            }
            if *w == self.topology.server {
                return bad("the server cannot also be a worker".into());
            }
        }
        if workers.windows(2).any(|p| p[0] == p[1]) {
            return bad("duplicate worker endpoint".into());
        }
        for b in &self.background {
            for e in [&b.src, &b.dst] {
                if !hosts.contains_key(e) {
                    return bad(format!("background endpoint {e:?} has no host attachment"));
                }
            }
            if b.src == b.dst {
                return bad("background flow with identical endpoints".into());
            }
            if !(b.rate_pps >= 0.0 && b.rate_pps.is_finite()) {
                return bad("background rate must be non-negative".into());
            }
            if b.packet_bytes == 0 {
                return bad("background packets must carry payload".into());
            }
        }
        if self.network.mtu_bytes == 0 {
            return bad("mtu must be positive".into());
        }
        if !(self.network.jitter_ms >= 0.0 && self.network.jitter_ms.is_finite()) {
            return bad("jitter must be non-negative".into());
        }
        if !(self.network.retransmit_timeout_ms > 0.0) {
            return bad("retransmit timeout must be positive".into());
        }
        if self.network.ttl == Some(0) {
            return bad("ttl must be positive".into());
        }
        let r = &self.routing;
        if !(r.report_period_s > 0.0 && r.report_period_s.is_finite()) {
            return bad("report period must be positive".into());
        }
        if let Some(s) = r.smoothing {
            if !(s > 0.0 && s <= 1.0) {
                return bad("smoothing must lie in (0, 1]".into());
            }
        }
        if r.k == Some(0) {
            return bad("k must be at least 1".into());
        }
        if let Some(p) = r.policy(0) {
            p.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        self.fl.training().validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        if self.fl.local_epochs == 0 {
            return bad("local epochs must be positive".into());
        }
        if !self.fl.epochs_per_worker.is_empty() && self.fl.epochs_per_worker.len() != workers.len() {
            return bad(format!(
                "epochs_per_worker lists {} entries for {} workers",
                self.fl.epochs_per_worker.len(),
                workers.len()
            ));
        }
        if self.fl.epochs_per_worker.contains(&0) {
            return bad("local epochs must be positive".into());
        }
        if self.fl.model == ModelKind::Mlp && self.fl.hidden == 0 {
            return bad("mlp needs a hidden layer".into());
        }
        if self.fl.payload_bytes == Some(0) {
            return bad("payload override must be positive".into());
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        Ok(())
    }

    /// Digest of everything except the routing choices: two logs may be
    /// compared only if their fingerprints match.
    pub fn fingerprint(&self) -> String {
        let mut c = self.clone();
        c.name.clear();
        c.routing = RoutingSection::default();
        c.seeds.rl = 0;
        c.replicates = 1;
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::presets;

    #[test]
    fn presets_round_trip_through_toml() {
        for name in presets::names() {
            let cfg = presets::load(name).unwrap();
            let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
            assert_eq!(cfg, back, "{name}");
        }
    }

    #[test]
    fn fingerprint_ignores_routing_only() {
        let cfg = presets::load("fig7_convergence").unwrap();
        let soft = cfg.with_protocol(Protocol::RlSoftmax);
        assert_eq!(cfg.fingerprint(), soft.fingerprint());
        let mut other = cfg.clone();
        other.seeds.data += 1;
        assert_ne!(cfg.fingerprint(), other.fingerprint());
    }

    #[test]
    fn unknown_fields_are_config_errors() {
        let mut text = presets::load("fig7_convergence").unwrap().to_toml();
        text.push_str("\nbogus = 3\n");
        assert!(matches!(ExperimentConfig::from_toml(&text), Err(HarnessError::Config(_))));
    }

    #[test]
    fn missing_worker_host_is_rejected() {
        let mut cfg = presets::load("fig7_convergence").unwrap();
        cfg.topology.workers = vec!["NOPE".into()];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn replicate_zero_keeps_seeds() {
        let s = Seeds::default();
        assert_eq!(s.replicate(0), s);
        assert_ne!(s.replicate(1), s);
    }
}
