use super::RoutingError;
use crate::topology::{RouterId, Topology};

/// Min-hop next-hop tables produced by a synchronous distance-vector
/// exchange. Among equally short neighbors the smallest router id wins.
#[derive(Debug, Clone, PartialEq)]
pub struct NextHopTable {
    /// `next[router][dst]`
    next: Vec<Vec<Option<RouterId>>>,
    dist: Vec<Vec<Option<usize>>>,
    rounds: usize,
}

impl NextHopTable {
    pub fn build(topo: &Topology) -> NextHopTable {
        let n = topo.router_count();
        let mut dist: Vec<Vec<Option<usize>>> = (0..n)
            .map(|r| (0..n).map(|d| if d == r { Some(0) } else { None }).collect())
            .collect();
        let mut rounds = 0;
        loop {
            rounds += 1;
            let prev = dist.clone();
            let mut changed = false;
            for r in topo.routers() {
                for d in 0..n {
                    if d == r.index() {
                        continue;
                    }
                    let best = topo
                        .neighbors(r)
                        .iter()
                        .filter_map(|nb| prev[nb.index()][d].map(|h| h + 1))
                        .min();
                    if best != dist[r.index()][d] {
                        dist[r.index()][d] = best;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let next = topo
            .routers()
            .map(|r| {
                (0..n)
                    .map(|d| {
                        let hops = dist[r.index()][d]?;
                        if hops == 0 {
                            return None;
                        }
                        topo.neighbors(r)
                            .iter()
                            .copied()
                            .find(|nb| dist[nb.index()][d] == Some(hops - 1))
                    })
                    .collect()
            })
            .collect();
        NextHopTable { next, dist, rounds }
    }

    pub fn next_hop(&self, router: RouterId, dst: RouterId) -> Option<RouterId> {
        self.next[router.index()][dst.index()]
    }

    pub fn distance(&self, router: RouterId, dst: RouterId) -> Option<usize> {
        self.dist[router.index()][dst.index()]
    }

    /// Exchange rounds until the vectors stopped changing.
    pub fn convergence_rounds(&self) -> usize {
        self.rounds
    }

    /// Router sequence the baseline takes from `src` to `dst`.
    pub fn route(&self, src: RouterId, dst: RouterId) -> Result<Vec<RouterId>, RoutingError> {
        let mut path = vec![src];
        let mut here = src;
        while here != dst {
            here = baseline_next_hop(self, here, dst)?;
            path.push(here);
        }
        Ok(path)
    }
}

pub fn baseline_next_hop(table: &NextHopTable, router: RouterId, dst: RouterId) -> Result<RouterId, RoutingError> {
    table.next_hop(router, dst).ok_or(RoutingError::Unreachable {
        router: router.0,
        dst: dst.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::build_topology;
    use crate::topology::tests::cfg;

    #[test]
    fn line_forwards_through_the_middle() {
        let topo = build_topology(&cfg(&["S", "A", "T"], &[("S", "A"), ("A", "T")], &[])).unwrap();
        let t = NextHopTable::build(&topo);
        let (s, a, tt) = (topo.router("S").unwrap(), topo.router("A").unwrap(), topo.router("T").unwrap());
        assert_eq!(baseline_next_hop(&t, s, tt).unwrap(), a);
        assert_eq!(t.distance(s, tt), Some(2));
    }

    #[test]
    fn diamond_tie_goes_to_smaller_neighbor() {
        let topo = build_topology(&cfg(
            &["S", "B", "A", "T"],
            &[("S", "B"), ("B", "T"), ("S", "A"), ("A", "T")],
            &[],
        ))
        .unwrap();
        let t = NextHopTable::build(&topo);
        let (s, a, tt) = (topo.router("S").unwrap(), topo.router("A").unwrap(), topo.router("T").unwrap());
        assert_eq!(baseline_next_hop(&t, s, tt).unwrap(), a);
    }

    #[test]
    fn at_destination_there_is_no_next_hop() {
        let topo = build_topology(&cfg(&["S", "T"], &[("S", "T")], &[])).unwrap();
        let t = NextHopTable::build(&topo);
        let s = topo.router("S").unwrap();
        assert!(baseline_next_hop(&t, s, s).is_err());
    }
}
