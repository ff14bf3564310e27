use super::HarnessError;
use crate::routing::{PolicyConfig, PolicyKind, RouterAgent};
use crate::simnet::{FlowKey, SimTime};
use crate::topology::{
    dag_filter, enumerate_loopfree_paths, refine_action_spaces, EndpointId, RefineConfig, RouterId, Topology,
};

/// Outcome of walking packets through refined action spaces with every
/// router choosing uniformly at random.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoopProbe {
    pub packets: u64,
    pub delivered: u64,
    /// hop traces that visit some router twice
    pub loops: u64,
    pub ttl_drops: u64,
    pub max_hops: usize,
}

/// Uses untrained softmax agents (all values zero, hence uniform choice)
/// over the action spaces refined for `ingress -> egress`.
pub fn probe_loops(
    topo: &Topology,
    ingress: RouterId,
    egress: RouterId,
    rc: &RefineConfig,
    packets: u64,
    ttl: u32,
    seed: u64,
) -> Result<LoopProbe, HarnessError> {
    let paths = enumerate_loopfree_paths(topo, ingress, egress, rc)?;
    let mut asm = refine_action_spaces(&paths)?;
    if rc.dag_filter {
        asm = dag_filter(&asm, topo, ingress, egress)?;
    }
    let flow = FlowKey {
        src: EndpointId(0),
        dst: EndpointId(1),
    };
    let mut policy = PolicyConfig::new(PolicyKind::Softmax);
    policy.rng_seed = seed;
    let mut agents: Vec<RouterAgent> = topo
        .routers()
        .map(|r| RouterAgent::new(r, policy, policy.alpha, SimTime::from_secs(5.0)))
        .collect();
    for (router, acts) in asm.for_pair(ingress, egress) {
        agents[router.index()].set_actions(flow, acts);
    }

    let mut out = LoopProbe {
        packets,
        ..LoopProbe::default()
    };
    let mut seen = vec![false; topo.router_count()];
    for _ in 0..packets {
        seen.iter_mut().for_each(|s| *s = false);
        let mut here = ingress;
        let mut hops = 0usize;
        let mut looped = false;
        let mut left = ttl;
        seen[here.index()] = true;
        loop {
            if here == egress {
                out.delivered += 1;
                break;
            }
            left -= 1;
            if left == 0 {
                out.ttl_drops += 1;
                break;
            }
            here = agents[here.index()].select_action(flow, SimTime::ZERO)?;
            hops += 1;
            looped |= std::mem::replace(&mut seen[here.index()], true);
        }
        out.loops += u64::from(looped);
        out.max_hops = out.max_hops.max(hops);
    }
    Ok(out)
}
