use super::{RouterId, Topology, TopologyError};
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Router sequence from ingress to egress. Simple by construction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path(pub Vec<RouterId>);

impl Path {
    pub fn hops(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn ingress(&self) -> Option<RouterId> {
        self.0.first().copied()
    }

    pub fn egress(&self) -> Option<RouterId> {
        self.0.last().copied()
    }

    pub fn routers(&self) -> &[RouterId] {
        &self.0
    }

    pub fn is_simple(&self) -> bool {
        let mut seen = self.0.clone();
        seen.sort();
        seen.windows(2).all(|w| w[0] != w[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathMethod {
    ExhaustiveDfs,
    KShortest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefineConfig {
    pub method: PathMethod,
    pub k: usize,
    pub dag_filter: bool,
}

impl RefineConfig {
    /// Router count up to which exhaustive enumeration is the default.
    pub const EXHAUSTIVE_CEILING: usize = 12;
    pub const DEFAULT_K: usize = 16;

    /// Exhaustive search on small meshes, k-shortest above the ceiling.
    pub fn for_router_count(n: usize, dag_filter: bool) -> Self {
        let method = if n <= Self::EXHAUSTIVE_CEILING {
            PathMethod::ExhaustiveDfs
        } else {
            PathMethod::KShortest
        };
        RefineConfig {
            method,
            k: Self::DEFAULT_K,
            dag_filter,
        }
    }
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            method: PathMethod::ExhaustiveDfs,
            k: Self::DEFAULT_K,
            dag_filter: true,
        }
    }
}

/// All loop-free ingress→egress paths (exhaustive) or the `k` minimum-hop
/// ones. The result is sorted by hop count, then by router sequence, which is
/// also the k-shortest tie-break order. An unreachable egress yields an empty
/// list.
pub fn enumerate_loopfree_paths(
    topo: &Topology,
    ingress: RouterId,
    egress: RouterId,
    cfg: &RefineConfig,
) -> Result<Vec<Path>, TopologyError> {
    if ingress == egress {
        return Err(TopologyError::SameIngressEgress(topo.router_name(ingress).to_string()));
    }
    let mut paths = match cfg.method {
        PathMethod::ExhaustiveDfs => all_simple_paths(topo, ingress, egress),
        PathMethod::KShortest => k_min_hop_paths(topo, ingress, egress, cfg.k.max(1)),
    };
    paths.sort_by(|a, b| a.hops().cmp(&b.hops()).then_with(|| a.cmp(b)));
    Ok(paths)
}

fn all_simple_paths(topo: &Topology, ingress: RouterId, egress: RouterId) -> Vec<Path> {
    let mut out = Vec::new();
    let mut on_path = vec![false; topo.router_count()];
    let mut path = vec![ingress];
    on_path[ingress.index()] = true;
    // each frame holds the next neighbor position to try
    let mut stack: Vec<usize> = vec![0];
    while let Some(pos) = stack.last_mut() {
        let here = *path.last().expect("path tracks stack");
        let nbrs = topo.neighbors(here);
        if *pos >= nbrs.len() {
            stack.pop();
            on_path[here.index()] = false;
            path.pop();
            continue;
        }
        let next = nbrs[*pos];
        *pos += 1;
        if on_path[next.index()] {
            continue;
        }
        if next == egress {
            let mut p = path.clone();
            p.push(egress);
            out.push(Path(p));
            continue;
        }
        on_path[next.index()] = true;
        path.push(next);
        stack.push(0);
    }
    out
}

/// Best-first search over partial simple paths keyed by
/// (hops so far + remaining BFS distance, router sequence). The BFS distance
/// never overestimates and a prefix sorts before all of its extensions, so
/// complete paths come off the heap in (hop count, lexicographic) order.
fn k_min_hop_paths(topo: &Topology, ingress: RouterId, egress: RouterId, k: usize) -> Vec<Path> {
    let to_egress = topo.hop_distances(egress);
    let Some(h0) = to_egress[ingress.index()] else {
        return Vec::new();
    };
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((h0, vec![ingress])));
    let mut out = Vec::new();
    while let Some(Reverse((_, path))) = heap.pop() {
        let here = *path.last().expect("non-empty");
        if here == egress {
            out.push(Path(path));
            if out.len() == k {
                break;
            }
            continue;
        }
        for &n in topo.neighbors(here) {
            if path.contains(&n) {
                continue;
            }
            if let Some(rest) = to_egress[n.index()] {
                let mut p = path.clone();
                p.push(n);
                heap.push(Reverse((p.len() - 1 + rest, p)));
            }
        }
    }
    out
}
