use super::{Path, RouterId, Topology, TopologyError};
use std::collections::{BTreeMap, BTreeSet};

/// Refined next-hop choices keyed by (router, ingress, egress).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActionSpaceMap {
    entries: BTreeMap<(RouterId, RouterId, RouterId), BTreeSet<RouterId>>,
}

impl ActionSpaceMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, router: RouterId, ingress: RouterId, egress: RouterId) -> Option<&BTreeSet<RouterId>> {
        self.entries.get(&(router, ingress, egress))
    }

    pub fn insert(&mut self, router: RouterId, ingress: RouterId, egress: RouterId, actions: BTreeSet<RouterId>) {
        self.entries.insert((router, ingress, egress), actions);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(RouterId, RouterId, RouterId), &BTreeSet<RouterId>)> {
        self.entries.iter()
    }

    /// Entries of one (ingress, egress) pair, keyed by router.
    pub fn for_pair(&self, ingress: RouterId, egress: RouterId) -> BTreeMap<RouterId, BTreeSet<RouterId>> {
        self.entries
            .iter()
            .filter(|((_, i, e), _)| *i == ingress && *e == egress)
            .map(|((r, _, _), acts)| (*r, acts.clone()))
            .collect()
    }

    /// Number of distinct (ingress, egress) keys held for `router`.
    pub fn pair_count(&self, router: RouterId) -> usize {
        self.entries.keys().filter(|(r, _, _)| *r == router).count()
    }

    /// Adds every entry of `other`, replacing entries with the same key.
    pub fn merge(&mut self, other: ActionSpaceMap) {
        self.entries.extend(other.entries);
    }

    fn replace_pair(&mut self, ingress: RouterId, egress: RouterId, pair: BTreeMap<RouterId, BTreeSet<RouterId>>) {
        self.entries.retain(|(_, i, e), _| !(*i == ingress && *e == egress));
        for (r, acts) in pair {
            self.entries.insert((r, ingress, egress), acts);
        }
    }
}

/// Each router on any path gets the set of its successors over all paths.
/// Paths must share one (ingress, egress) pair; an empty set gives an empty map.
pub fn refine_action_spaces(paths: &[Path]) -> Result<ActionSpaceMap, TopologyError> {
    let mut asm = ActionSpaceMap::new();
    let Some(first) = paths.first() else {
        return Ok(asm);
    };
    let (ingress, egress) = match (first.ingress(), first.egress()) {
        (Some(i), Some(e)) => (i, e),
        _ => return Ok(asm),
    };
    for p in paths {
        if p.ingress() != Some(ingress) || p.egress() != Some(egress) {
            return Err(TopologyError::MixedPathEndpoints);
        }
        for w in p.routers().windows(2) {
            asm.entries
                .entry((w[0], ingress, egress))
                .or_default()
                .insert(w[1]);
        }
    }
    Ok(asm)
}

/// Makes the (ingress, egress) action graph acyclic.
///
/// Pruning order: depth-first search from the ingress, visiting actions in
/// ascending router order, drops every back edge it meets. Routers left without
/// actions (other than the egress) are then removed together with the edges
/// into them, repeatedly, so that every remaining action leads on toward the
/// egress. Entries for other pairs are left untouched.
pub fn dag_filter(
    asm: &ActionSpaceMap,
    topo: &Topology,
    ingress: RouterId,
    egress: RouterId,
) -> Result<ActionSpaceMap, TopologyError> {
    let pair = asm.for_pair(ingress, egress);
    if pair.is_empty() {
        return Ok(asm.clone());
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Gray,
        Black,
    }
    let mut mark = vec![Mark::White; topo.router_count()];
    let mut kept: BTreeMap<RouterId, BTreeSet<RouterId>> = BTreeMap::new();
    // (router, its actions in order, next action position)
    let mut stack: Vec<(RouterId, Vec<RouterId>, usize)> = Vec::new();
    let actions_of = |r: RouterId, pair: &BTreeMap<RouterId, BTreeSet<RouterId>>| -> Vec<RouterId> {
        if r == egress {
            Vec::new()
        } else {
            pair.get(&r).map(|s| s.iter().copied().collect()).unwrap_or_default()
        }
    };
    mark[ingress.index()] = Mark::Gray;
    stack.push((ingress, actions_of(ingress, &pair), 0));
    kept.insert(ingress, BTreeSet::new());
    while let Some((r, acts, pos)) = stack.last_mut() {
        if *pos >= acts.len() {
            mark[r.index()] = Mark::Black;
            stack.pop();
            continue;
        }
        let (r, next) = (*r, acts[*pos]);
        *pos += 1;
        match mark[next.index()] {
            Mark::Gray => {} // back edge
            Mark::Black => {
                kept.entry(r).or_default().insert(next);
            }
            Mark::White => {
                kept.entry(r).or_default().insert(next);
                mark[next.index()] = Mark::Gray;
                if next != egress {
                    kept.entry(next).or_default();
                }
                stack.push((next, actions_of(next, &pair), 0));
            }
        }
    }
    kept.remove(&egress);

    loop {
        let dead: BTreeSet<RouterId> = kept
            .iter()
            .filter(|(_, acts)| acts.is_empty())
            .map(|(r, _)| *r)
            .collect();
        if dead.is_empty() {
            break;
        }
        if dead.contains(&ingress) {
            return Err(TopologyError::PruneDisconnects {
                ingress: topo.router_name(ingress).to_string(),
                egress: topo.router_name(egress).to_string(),
            });
        }
        kept.retain(|r, _| !dead.contains(r));
        for acts in kept.values_mut() {
            acts.retain(|a| !dead.contains(a));
        }
    }

    let mut out = asm.clone();
    out.replace_pair(ingress, egress, kept);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::build_topology;
    use crate::topology::tests::cfg;

    fn set(topo: &Topology, names: &[&str]) -> BTreeSet<RouterId> {
        names.iter().map(|n| topo.router(n).unwrap()).collect()
    }

    fn path(topo: &Topology, names: &[&str]) -> Path {
        Path(names.iter().map(|n| topo.router(n).unwrap()).collect())
    }

    fn mixing() -> Topology {
        build_topology(&cfg(
            &["S", "A", "B", "T"],
            &[("S", "A"), ("S", "B"), ("A", "B"), ("A", "T"), ("B", "T")],
            &[],
        ))
        .unwrap()
    }

    #[test]
    fn single_path_refines_to_successors() {
        let topo = mixing();
        let asm = refine_action_spaces(&[path(&topo, &["S", "A", "T"])]).unwrap();
        let (s, a, t) = (topo.router("S").unwrap(), topo.router("A").unwrap(), topo.router("T").unwrap());
        assert_eq!(asm.get(s, s, t), Some(&set(&topo, &["A"])));
        assert_eq!(asm.get(a, s, t), Some(&set(&topo, &["T"])));
        assert_eq!(asm.get(t, s, t), None);
        assert_eq!(asm.len(), 2);
    }

    #[test]
    fn diamond_refines_to_union() {
        let topo = mixing();
        let asm = refine_action_spaces(&[path(&topo, &["S", "A", "T"]), path(&topo, &["S", "B", "T"])]).unwrap();
        let (s, a, b, t) = (
            topo.router("S").unwrap(),
            topo.router("A").unwrap(),
            topo.router("B").unwrap(),
            topo.router("T").unwrap(),
        );
        assert_eq!(asm.get(s, s, t), Some(&set(&topo, &["A", "B"])));
        assert_eq!(asm.get(a, s, t), Some(&set(&topo, &["T"])));
        assert_eq!(asm.get(b, s, t), Some(&set(&topo, &["T"])));
        // already acyclic
        assert_eq!(dag_filter(&asm, &topo, s, t).unwrap(), asm);
    }

    #[test]
    fn crossing_paths_admit_a_cycle_that_the_filter_removes() {
        let topo = mixing();
        let asm = refine_action_spaces(&[path(&topo, &["S", "A", "B", "T"]), path(&topo, &["S", "B", "A", "T"])]).unwrap();
        let (s, a, b, t) = (
            topo.router("S").unwrap(),
            topo.router("A").unwrap(),
            topo.router("B").unwrap(),
            topo.router("T").unwrap(),
        );
        assert_eq!(asm.get(a, s, t), Some(&set(&topo, &["B", "T"])));
        assert_eq!(asm.get(b, s, t), Some(&set(&topo, &["A", "T"])));

        let filtered = dag_filter(&asm, &topo, s, t).unwrap();
        let a_to_b = filtered.get(a, s, t).unwrap().contains(&b);
        let b_to_a = filtered.get(b, s, t).unwrap().contains(&a);
        assert!(a_to_b ^ b_to_a, "exactly one direction of the A-B cycle is pruned");
        // DFS visits A first (lexicographic), so the back edge is B -> A.
        assert!(a_to_b && !b_to_a);
    }

    #[test]
    fn dead_ends_left_by_back_edges_are_pruned() {
        // S-A-B-T and S-B-C-A-T: DFS S,A,B,C meets C->A as a back edge,
        // which leaves C without actions.
        let topo = build_topology(&cfg(
            &["S", "A", "B", "C", "T"],
            &[("S", "A"), ("S", "B"), ("A", "B"), ("B", "C"), ("C", "A"), ("A", "T"), ("B", "T")],
            &[],
        ))
        .unwrap();
        let asm = refine_action_spaces(&[path(&topo, &["S", "A", "B", "T"]), path(&topo, &["S", "B", "C", "A", "T"])]).unwrap();
        let (s, b, c, t) = (
            topo.router("S").unwrap(),
            topo.router("B").unwrap(),
            topo.router("C").unwrap(),
            topo.router("T").unwrap(),
        );
        let filtered = dag_filter(&asm, &topo, s, t).unwrap();
        assert!(filtered.get(c, s, t).is_none());
        assert!(!filtered.get(b, s, t).unwrap().contains(&c));
    }

    #[test]
    fn empty_map_is_unchanged() {
        let topo = mixing();
        let (s, t) = (topo.router("S").unwrap(), topo.router("T").unwrap());
        let empty = ActionSpaceMap::new();
        assert!(refine_action_spaces(&[]).unwrap().is_empty());
        assert_eq!(dag_filter(&empty, &topo, s, t).unwrap(), empty);
    }

    #[test]
    fn mixed_pairs_are_rejected() {
        let topo = mixing();
        let err = refine_action_spaces(&[path(&topo, &["S", "A", "T"]), path(&topo, &["A", "T"])]).unwrap_err();
        assert_eq!(err, TopologyError::MixedPathEndpoints);
    }
}
