use super::RoutingError;
use crate::simnet::{FlowKey, SimTime};
use crate::topology::RouterId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Greedy,
    EpsilonGreedyDecay,
    Softmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// learning rate in (0, 1]
    pub alpha: f64,
    pub epsilon0: f64,
    /// per-second decay base of the exploration rate
    pub decay_beta: f64,
    /// softmax temperature, in milliseconds of action value
    pub tau: f64,
    pub rng_seed: u64,
}

impl PolicyConfig {
    pub fn new(kind: PolicyKind) -> PolicyConfig {
        PolicyConfig {
            kind,
            alpha: 0.7,
            epsilon0: 0.5,
            decay_beta: 0.99,
            tau: 2.0,
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), RoutingError> {
        let bad = |what: &str| Err(RoutingError::BadPolicy(what.to_string()));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must lie in (0, 1]");
        }
        if !(self.epsilon0 > 0.0 && self.epsilon0 <= 1.0) {
            return bad("epsilon0 must lie in (0, 1]");
        }
        if !(self.decay_beta > 0.0 && self.decay_beta < 1.0) {
            return bad("decay_beta must lie in (0, 1)");
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad("tau must be positive");
        }
        Ok(())
    }

    /// Exploration rate `epsilon0 * decay_beta^t`, `t` in simulated seconds.
    pub fn epsilon(&self, now: SimTime) -> f64 {
        self.epsilon0 * self.decay_beta.powf(now.as_secs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct NeighborEstimate {
    value: f64,
    fresh: bool,
}

/// One entry of a periodic report: the receiving router's smoothed sample of
/// `r + Q_next` for the upstream router's action toward it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateReport {
    pub upstream: RouterId,
    pub flow: FlowKey,
    pub estimate: f64,
}

/// Serializable Q-table and neighbor-estimate state of one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSnapshot {
    pub router: RouterId,
    pub q: Vec<(FlowKey, RouterId, f64)>,
    pub estimates: Vec<(FlowKey, RouterId, f64)>,
}

/// Q-routing agent of one router.
///
/// Action values start at zero; rewards are negative delays, so untried next
/// hops look best until they have been measured.
#[derive(Debug, Clone)]
pub struct RouterAgent {
    router: RouterId,
    /// refined next hops per flow, ascending
    actions: BTreeMap<FlowKey, Vec<RouterId>>,
    /// action values, parallel to `actions`
    q: BTreeMap<FlowKey, Vec<f64>>,
    policy: PolicyConfig,
    smoothing: f64,
    report_period: SimTime,
    estimates: BTreeMap<(FlowKey, RouterId), NeighborEstimate>,
    rng: ChaCha8Rng,
}

impl RouterAgent {
    pub fn new(router: RouterId, policy: PolicyConfig, smoothing: f64, report_period: SimTime) -> RouterAgent {
        let seed = policy.rng_seed ^ (router.0 as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        RouterAgent {
            router,
            actions: BTreeMap::new(),
            q: BTreeMap::new(),
            policy,
            smoothing,
            report_period,
            estimates: BTreeMap::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn router(&self) -> RouterId {
        self.router
    }

    pub fn policy(&self) -> &PolicyConfig {
        &self.policy
    }

    pub fn report_period(&self) -> SimTime {
        self.report_period
    }

    /// Installs the refined action space for `flow`, resetting its values.
    pub fn set_actions(&mut self, flow: FlowKey, actions: impl IntoIterator<Item = RouterId>) {
        let mut acts: Vec<RouterId> = actions.into_iter().collect();
        acts.sort();
        acts.dedup();
        self.q.insert(flow, vec![0.0; acts.len()]);
        self.actions.insert(flow, acts);
    }

    pub fn actions(&self, flow: FlowKey) -> &[RouterId] {
        self.actions.get(&flow).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn flows(&self) -> impl Iterator<Item = FlowKey> + '_ {
        self.actions.keys().copied()
    }

    pub fn q(&self, flow: FlowKey, action: RouterId) -> Option<f64> {
        let pos = self.actions.get(&flow)?.iter().position(|a| *a == action)?;
        Some(self.q[&flow][pos])
    }

    /// Overwrites action values; test and checkpoint hook.
    pub fn set_q(&mut self, flow: FlowKey, action: RouterId, value: f64) -> Result<(), RoutingError> {
        let pos = self.position(flow, action)?;
        self.q.get_mut(&flow).expect("parallel maps")[pos] = value;
        Ok(())
    }

    fn position(&self, flow: FlowKey, action: RouterId) -> Result<usize, RoutingError> {
        self.actions
            .get(&flow)
            .and_then(|acts| acts.iter().position(|a| *a == action))
            .ok_or(RoutingError::ActionOutsideSpace {
                router: self.router.0,
                action: action.0,
            })
    }

    fn greedy_index(values: &[f64]) -> usize {
        let mut best = 0;
        for (i, v) in values.iter().enumerate().skip(1) {
            if *v > values[best] {
                best = i;
            }
        }
        best
    }

    /// Highest-valued action; ties go to the smallest router id.
    pub fn greedy_action(&self, flow: FlowKey) -> Option<RouterId> {
        let acts = self.actions.get(&flow).filter(|a| !a.is_empty())?;
        Some(acts[Self::greedy_index(&self.q[&flow])])
    }

    /// Largest action value for `flow`, or zero when the router has no
    /// actions for it.
    pub fn best_q(&self, flow: FlowKey) -> f64 {
        self.q
            .get(&flow)
            .filter(|v| !v.is_empty())
            .map(|v| v.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .unwrap_or(0.0)
    }

    /// Behavior-policy selection probabilities at time `now`.
    pub fn action_probabilities(&self, flow: FlowKey, now: SimTime) -> Vec<(RouterId, f64)> {
        let Some(acts) = self.actions.get(&flow).filter(|a| !a.is_empty()) else {
            return Vec::new();
        };
        let values = &self.q[&flow];
        let greedy = Self::greedy_index(values);
        let probs: Vec<f64> = match self.policy.kind {
            PolicyKind::Greedy => (0..acts.len()).map(|i| if i == greedy { 1.0 } else { 0.0 }).collect(),
            PolicyKind::EpsilonGreedyDecay => {
                if acts.len() == 1 {
                    vec![1.0]
                } else {
                    let eps = self.policy.epsilon(now);
                    let other = eps / (acts.len() - 1) as f64;
                    (0..acts.len()).map(|i| if i == greedy { 1.0 - eps } else { other }).collect()
                }
            }
            PolicyKind::Softmax => softmax(values, self.policy.tau),
        };
        acts.iter().copied().zip(probs).collect()
    }

    /// Picks a next hop for `flow` according to the behavior policy.
    pub fn select_action(&mut self, flow: FlowKey, now: SimTime) -> Result<RouterId, RoutingError> {
        let acts = self
            .actions
            .get(&flow)
            .filter(|a| !a.is_empty())
            .ok_or(RoutingError::EmptyActionSet(self.router.0))?;
        let values = &self.q[&flow];
        let greedy = Self::greedy_index(values);
        let pick = match self.policy.kind {
            PolicyKind::Greedy => greedy,
            PolicyKind::EpsilonGreedyDecay => {
                if acts.len() > 1 && self.rng.random::<f64>() < self.policy.epsilon(now) {
                    let j = self.rng.random_range(0..acts.len() - 1);
                    if j >= greedy {
                        j + 1
                    } else {
                        j
                    }
                } else {
                    greedy
                }
            }
            PolicyKind::Softmax => {
                let max = values[greedy];
                let weights: Vec<f64> = values.iter().map(|v| ((v - max) / self.policy.tau).exp()).collect();
                let total: f64 = weights.iter().sum();
                let mut u = self.rng.random::<f64>() * total;
                let mut chosen = weights.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    if u < *w {
                        chosen = i;
                        break;
                    }
                    u -= w;
                }
                chosen
            }
        };
        Ok(acts[pick])
    }

    /// `Q <- Q + alpha (sample - Q)`; returns the new value.
    pub fn update_q(&mut self, flow: FlowKey, action: RouterId, sample: f64) -> Result<f64, RoutingError> {
        let pos = self.position(flow, action)?;
        let alpha = self.policy.alpha;
        let q = &mut self.q.get_mut(&flow).expect("parallel maps")[pos];
        *q += alpha * (sample - *q);
        Ok(*q)
    }

    /// Called when a packet of `flow` arrives from `upstream` after a hop of
    /// `delay_ms`. Folds `-delay + max_a Q_self(flow, a)` (zero downstream
    /// term at the egress) into the estimate kept for the upstream router and
    /// returns the sample.
    pub fn downstream_accumulate(&mut self, flow: FlowKey, upstream: RouterId, delay_ms: f64, at_egress: bool) -> f64 {
        let downstream = if at_egress { 0.0 } else { self.best_q(flow) };
        let sample = -delay_ms + downstream;
        let s = self.smoothing;
        self.estimates
            .entry((flow, upstream))
            .and_modify(|e| {
                e.value += s * (sample - e.value);
                e.fresh = true;
            })
            .or_insert(NeighborEstimate { value: sample, fresh: true });
        sample
    }

    /// Estimates refreshed since the previous report, in (flow, upstream)
    /// order. Clears the fresh marks.
    pub fn report_estimates(&mut self, _now: SimTime) -> Vec<EstimateReport> {
        let mut out = Vec::new();
        for ((flow, upstream), est) in self.estimates.iter_mut() {
            if est.fresh {
                est.fresh = false;
                out.push(EstimateReport {
                    upstream: *upstream,
                    flow: *flow,
                    estimate: est.value,
                });
            }
        }
        out
    }

    pub fn snapshot(&self) -> AgentSnapshot {
        let q = self
            .actions
            .iter()
            .flat_map(|(flow, acts)| acts.iter().zip(&self.q[flow]).map(move |(a, v)| (*flow, *a, *v)))
            .collect();
        let estimates = self
            .estimates
            .iter()
            .map(|((flow, up), e)| (*flow, *up, e.value))
            .collect();
        AgentSnapshot {
            router: self.router,
            q,
            estimates,
        }
    }

    /// Restores values from a snapshot. Entries outside the installed action
    /// spaces are rejected.
    pub fn restore(&mut self, snap: &AgentSnapshot) -> Result<(), RoutingError> {
        for (flow, action, value) in &snap.q {
            self.set_q(*flow, *action, *value)?;
        }
        self.estimates = snap
            .estimates
            .iter()
            .map(|(flow, up, v)| ((*flow, *up), NeighborEstimate { value: *v, fresh: false }))
            .collect();
        Ok(())
    }
}

/// Boltzmann weights `exp(q / tau)`, normalized. Shifted by the maximum
/// before exponentiating.
pub(crate) fn softmax(values: &[f64], tau: f64) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = values.iter().map(|v| ((v - max) / tau).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}
