//! Mesh topology: routers, directed links, host attachments.
//!
//! Router and endpoint names are interned into dense indices. Routers are
//! sorted by name before indexing, so comparing two [`RouterId`]s is the same
//! as comparing the router names lexicographically. Every deterministic
//! tie-break in the crate relies on this.

mod paths;
mod refine;

pub use paths::{enumerate_loopfree_paths, Path, PathMethod, RefineConfig};
pub use refine::{dag_filter, refine_action_spaces, ActionSpaceMap};

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RouterId(pub u32);

impl RouterId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EndpointId(pub u32);

impl EndpointId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("topology has no routers")]
    Empty,
    #[error("duplicate router {0:?}")]
    DuplicateRouter(String),
    #[error("link references unknown router {0:?}")]
    UnknownRouter(String),
    #[error("link {0:?} -- {1:?} connects a router to itself")]
    SelfLoop(String, String),
    #[error("duplicate link {0:?} -- {1:?}")]
    DuplicateLink(String, String),
    #[error("link {a:?} -- {b:?} has non-positive capacity {capacity_mbps} Mbps")]
    BadCapacity {
        a: String,
        b: String,
        capacity_mbps: f64,
    },
    #[error("link {a:?} -- {b:?} has invalid processing delay {proc_delay_ms} ms")]
    BadDelay {
        a: String,
        b: String,
        proc_delay_ms: f64,
    },
    #[error("host {host:?} attached to unknown router {router:?}")]
    DanglingHost { host: String, router: String },
    #[error("router graph is disconnected: {0:?} unreachable from {1:?}")]
    Disconnected(String, String),
    #[error("unknown endpoint {0:?}")]
    UnknownEndpoint(String),
    #[error("ingress and egress must differ (both {0:?})")]
    SameIngressEgress(String),
    #[error("paths do not share one ingress/egress pair")]
    MixedPathEndpoints,
    #[error("action-space pruning disconnects {ingress:?} from {egress:?}")]
    PruneDisconnects { ingress: String, egress: String },
}

/// One undirected link entry as written in a scenario file:
/// `[a, b, capacity_mbps, proc_delay_ms]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec(pub String, pub String, pub f64, pub f64);

/// Topology section of a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyConfig {
    pub routers: Vec<String>,
    pub links: Vec<LinkSpec>,
    /// endpoint name -> router name
    pub hosts: BTreeMap<String, String>,
}

/// A directed link between two neighboring routers.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub from: RouterId,
    pub to: RouterId,
    pub capacity_bps: f64,
    pub proc_delay_ms: f64,
}

#[derive(Debug, Clone)]
pub struct Topology {
    router_names: Vec<String>,
    router_index: BTreeMap<String, RouterId>,
    links: Vec<Link>,
    link_index: BTreeMap<(RouterId, RouterId), usize>,
    /// sorted neighbor lists, indexed by router
    neighbors: Vec<Vec<RouterId>>,
    endpoint_names: Vec<String>,
    endpoint_index: BTreeMap<String, EndpointId>,
    attachment: Vec<RouterId>,
}

/// Validates a scenario topology section and builds the indexed graph.
/// Each configured link becomes two directed links with the same capacity and
/// processing delay.
pub fn build_topology(config: &TopologyConfig) -> Result<Topology, TopologyError> {
    if config.routers.is_empty() {
        return Err(TopologyError::Empty);
    }
    let mut names: Vec<String> = config.routers.clone();
    names.sort();
    for pair in names.windows(2) {
        if pair[0] == pair[1] {
            return Err(TopologyError::DuplicateRouter(pair[0].clone()));
        }
    }
    let router_index: BTreeMap<String, RouterId> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), RouterId(i as u32)))
        .collect();
    let lookup = |name: &str| {
        router_index
            .get(name)
            .copied()
            .ok_or_else(|| TopologyError::UnknownRouter(name.to_string()))
    };

    let mut links = Vec::with_capacity(config.links.len() * 2);
    let mut link_index = BTreeMap::new();
    let mut neighbors = vec![Vec::new(); names.len()];
    for LinkSpec(a, b, capacity_mbps, proc_delay_ms) in &config.links {
        let ra = lookup(a)?;
        let rb = lookup(b)?;
        if ra == rb {
            return Err(TopologyError::SelfLoop(a.clone(), b.clone()));
        }
        if !(capacity_mbps.is_finite() && *capacity_mbps > 0.0) {
            return Err(TopologyError::BadCapacity {
                a: a.clone(),
                b: b.clone(),
                capacity_mbps: *capacity_mbps,
            });
        }
        if !(proc_delay_ms.is_finite() && *proc_delay_ms >= 0.0) {
            return Err(TopologyError::BadDelay {
                a: a.clone(),
                b: b.clone(),
                proc_delay_ms: *proc_delay_ms,
            });
        }
        if link_index.contains_key(&(ra, rb)) {
            return Err(TopologyError::DuplicateLink(a.clone(), b.clone()));
        }
        for (from, to) in [(ra, rb), (rb, ra)] {
            link_index.insert((from, to), links.len());
            links.push(Link {
                from,
                to,
                capacity_bps: capacity_mbps * 1e6,
                proc_delay_ms: *proc_delay_ms,
            });
            neighbors[from.index()].push(to);
        }
    }
    for list in &mut neighbors {
        list.sort();
    }

    let mut endpoint_names = Vec::with_capacity(config.hosts.len());
    let mut endpoint_index = BTreeMap::new();
    let mut attachment = Vec::with_capacity(config.hosts.len());
    for (host, router) in &config.hosts {
        let r = router_index
            .get(router)
            .copied()
            .ok_or_else(|| TopologyError::DanglingHost {
                host: host.clone(),
                router: router.clone(),
            })?;
        endpoint_index.insert(host.clone(), EndpointId(endpoint_names.len() as u32));
        endpoint_names.push(host.clone());
        attachment.push(r);
    }

    let topo = Topology {
        router_names: names,
        router_index,
        links,
        link_index,
        neighbors,
        endpoint_names,
        endpoint_index,
        attachment,
    };
    let dist = topo.hop_distances(RouterId(0));
    if let Some(i) = dist.iter().position(|d| d.is_none()) {
        return Err(TopologyError::Disconnected(
            topo.router_names[i].clone(),
            topo.router_names[0].clone(),
        ));
    }
    Ok(topo)
}

impl Topology {
    pub fn router_count(&self) -> usize {
        self.router_names.len()
    }

    pub fn routers(&self) -> impl Iterator<Item = RouterId> + '_ {
        (0..self.router_names.len() as u32).map(RouterId)
    }

    pub fn router_name(&self, r: RouterId) -> &str {
        &self.router_names[r.index()]
    }

    pub fn router(&self, name: &str) -> Result<RouterId, TopologyError> {
        self.router_index
            .get(name)
            .copied()
            .ok_or_else(|| TopologyError::UnknownRouter(name.to_string()))
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    /// Index of the directed link `from -> to`, if the routers are neighbors.
    pub fn link_id(&self, from: RouterId, to: RouterId) -> Option<usize> {
        self.link_index.get(&(from, to)).copied()
    }

    pub fn link(&self, from: RouterId, to: RouterId) -> Option<&Link> {
        self.link_id(from, to).map(|i| &self.links[i])
    }

    pub fn neighbors(&self, r: RouterId) -> &[RouterId] {
        &self.neighbors[r.index()]
    }

    pub fn are_neighbors(&self, a: RouterId, b: RouterId) -> bool {
        self.link_index.contains_key(&(a, b))
    }

    pub fn endpoint_count(&self) -> usize {
        self.endpoint_names.len()
    }

    pub fn endpoints(&self) -> impl Iterator<Item = EndpointId> + '_ {
        (0..self.endpoint_names.len() as u32).map(EndpointId)
    }

    pub fn endpoint(&self, name: &str) -> Result<EndpointId, TopologyError> {
        self.endpoint_index
            .get(name)
            .copied()
            .ok_or_else(|| TopologyError::UnknownEndpoint(name.to_string()))
    }

    pub fn endpoint_name(&self, e: EndpointId) -> &str {
        &self.endpoint_names[e.index()]
    }

    /// Router the endpoint is attached to.
    pub fn attachment(&self, e: EndpointId) -> RouterId {
        self.attachment[e.index()]
    }

    /// Breadth-first hop counts from `source`; `None` marks unreachable routers.
    pub fn hop_distances(&self, source: RouterId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.router_count()];
        dist[source.index()] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(r) = queue.pop_front() {
            let d = dist[r.index()].unwrap_or(0);
            for &n in self.neighbors(r) {
                if dist[n.index()].is_none() {
                    dist[n.index()] = Some(d + 1);
                    queue.push_back(n);
                }
            }
        }
        dist
    }

    /// Set of routers with at least one attached endpoint.
    pub fn edge_routers(&self) -> BTreeSet<RouterId> {
        self.attachment.iter().copied().collect()
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Topology {{ {} routers, {} links, {} hosts }}",
            self.router_count(),
            self.links.len() / 2,
            self.endpoint_count()
        )
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn cfg(routers: &[&str], links: &[(&str, &str)], hosts: &[(&str, &str)]) -> TopologyConfig {
        TopologyConfig {
            routers: routers.iter().map(|s| s.to_string()).collect(),
            links: links
                .iter()
                .map(|(a, b)| LinkSpec(a.to_string(), b.to_string(), 40.0, 0.5))
                .collect(),
            hosts: hosts
                .iter()
                .map(|(h, r)| (h.to_string(), r.to_string()))
                .collect(),
        }
    }

    #[test]
    fn line_of_three_is_bidirectional() {
        let topo = build_topology(&cfg(&["S", "A", "T"], &[("S", "A"), ("A", "T")], &[])).unwrap();
        assert_eq!(topo.router_count(), 3);
        assert_eq!(topo.link_count(), 4);
        let s = topo.router("S").unwrap();
        let a = topo.router("A").unwrap();
        let t = topo.router("T").unwrap();
        assert!(topo.are_neighbors(s, a) && topo.are_neighbors(a, s));
        assert!(topo.are_neighbors(a, t) && topo.are_neighbors(t, a));
        assert!(!topo.are_neighbors(s, t));
        assert_eq!(topo.link(s, a).unwrap().capacity_bps, 40e6);
    }

    #[test]
    fn ids_follow_lexicographic_names() {
        let topo = build_topology(&cfg(&["R2", "R10", "R1"], &[("R1", "R2"), ("R2", "R10")], &[])).unwrap();
        assert!(topo.router("R1").unwrap() < topo.router("R10").unwrap());
        assert!(topo.router("R10").unwrap() < topo.router("R2").unwrap());
    }

    #[test]
    fn rejects_unknown_router() {
        let err = build_topology(&cfg(&["R1", "R2"], &[("R1", "R99")], &[])).unwrap_err();
        assert_eq!(err, TopologyError::UnknownRouter("R99".into()));
    }

    #[test]
    fn rejects_disconnected_graph() {
        let err = build_topology(&cfg(&["A", "B", "C"], &[("A", "B")], &[])).unwrap_err();
        assert!(matches!(err, TopologyError::Disconnected(..)));
    }

    #[test]
    fn rejects_duplicate_link_in_either_direction() {
        let err = build_topology(&cfg(&["A", "B"], &[("A", "B"), ("B", "A")], &[])).unwrap_err();
        assert!(matches!(err, TopologyError::DuplicateLink(..)));
    }

    #[test]
    fn rejects_dangling_host() {
        let err = build_topology(&cfg(&["A", "B"], &[("A", "B")], &[("W1", "C")])).unwrap_err();
        assert!(matches!(err, TopologyError::DanglingHost { .. }));
    }

    #[test]
    fn rejects_bad_link_parameters() {
        let mut c = cfg(&["A", "B"], &[("A", "B")], &[]);
        c.links[0].2 = 0.0;
        assert!(matches!(build_topology(&c), Err(TopologyError::BadCapacity { .. })));
        let mut c = cfg(&["A", "B"], &[("A", "B")], &[]);
        c.links[0].3 = -1.0;
        assert!(matches!(build_topology(&c), Err(TopologyError::BadDelay { .. })));
        let c = cfg(&["A", "B"], &[("A", "A")], &[]);
        assert!(matches!(build_topology(&c), Err(TopologyError::SelfLoop(..))));
    }
}
