use meshfl::routing::{PolicyConfig, PolicyKind, RouterAgent};
use meshfl::simnet::{FlowKey, SimTime};
use meshfl::topology::{EndpointId, RouterId};
use proptest::prelude::*;

const FLOW: FlowKey = FlowKey {
    src: EndpointId(0),
    dst: EndpointId(1),
};

fn agent(kind: PolicyKind, values: &[f64]) -> RouterAgent {
    let mut policy = PolicyConfig::new(kind);
    policy.tau = 2.0;
    let mut a = RouterAgent::new(RouterId(0), policy, 0.7, SimTime::from_secs(5.0));
    let acts: Vec<RouterId> = (1..=values.len() as u32).map(RouterId).collect();
    a.set_actions(FLOW, acts.clone());
    for (r, v) in acts.iter().zip(values) {
        a.set_q(FLOW, *r, *v).unwrap();
    }
    a
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-200.0f64..0.0, 1..6)
}

proptest! {
    #[test]
    fn greedy_choice_ignores_a_common_shift(v in values(), c in -100.0f64..100.0) {
        // rounding after a shift could break near-ties, so require a clear best
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assume!(v.iter().filter(|x| max - **x < 1e-6).count() == 1);
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        let base = agent(PolicyKind::Greedy, &v).greedy_action(FLOW);
        prop_assert_eq!(base, agent(PolicyKind::Greedy, &shifted).greedy_action(FLOW));
    }

    #[test]
    fn softmax_is_a_distribution_invariant_to_shifts(v in values(), c in -100.0f64..100.0) {
        let p = agent(PolicyKind::Softmax, &v).action_probabilities(FLOW, SimTime::ZERO);
        let total: f64 = p.iter().map(|x| x.1).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        let q = agent(PolicyKind::Softmax, &shifted).action_probabilities(FLOW, SimTime::ZERO);
        for (a, b) in p.iter().zip(&q) {
            prop_assert_eq!(a.0, b.0);
            prop_assert!((a.1 - b.1).abs() < 1e-9);
        }
    }

    #[test]
    fn update_is_a_contraction_toward_the_sample(
        old in -500.0f64..0.0,
        sample in -500.0f64..0.0,
        alpha in 0.01f64..=1.0,
    ) {
        let mut policy = PolicyConfig::new(PolicyKind::Greedy);
        policy.alpha = alpha;
        let mut a = RouterAgent::new(RouterId(0), policy, 0.7, SimTime::from_secs(1.0));
        a.set_actions(FLOW, [RouterId(1)]);
        a.set_q(FLOW, RouterId(1), old).unwrap();
        let new = a.update_q(FLOW, RouterId(1), sample).unwrap();
        let expected = (1.0 - alpha) * (old - sample).abs();
        prop_assert!(((new - sample).abs() - expected).abs() <= 1e-9 * (1.0 + old.abs() + sample.abs()));
    }

    #[test]
    fn exploration_rate_decays(t1 in 0.0f64..5000.0, dt in 0.001f64..1000.0) {
        let p = PolicyConfig::new(PolicyKind::EpsilonGreedyDecay);
        let a = p.epsilon(SimTime::from_secs(t1));
        let b = p.epsilon(SimTime::from_secs(t1 + dt));
        prop_assert!(b < a || a == 0.0);
    }
}

#[test]
fn exploration_rate_vanishes() {
    let p = PolicyConfig::new(PolicyKind::EpsilonGreedyDecay);
    assert_eq!(p.epsilon(SimTime::ZERO), p.epsilon0);
    assert!(p.epsilon(SimTime::from_secs(10_000.0)) < 1e-40);
}

#[test]
fn epsilon_greedy_explores_at_the_scheduled_rate() {
    let mut policy = PolicyConfig::new(PolicyKind::EpsilonGreedyDecay);
    policy.rng_seed = 5;
    let mut a = RouterAgent::new(RouterId(0), policy, 0.7, SimTime::from_secs(5.0));
    a.set_actions(FLOW, [RouterId(1), RouterId(2), RouterId(3)]);
    a.set_q(FLOW, RouterId(2), 1.0).unwrap();
    let at = SimTime::from_secs(30.0);
    let eps = policy.epsilon(at);
    let n = 100_000;
    let greedy = (0..n).filter(|_| a.select_action(FLOW, at).unwrap() == RouterId(2)).count();
    assert!((greedy as f64 / n as f64 - (1.0 - eps)).abs() < 0.01);
}

#[test]
fn estimates_compose_along_a_path() {
    // egress agent reports -delay; the next router upstream adds its own hop
    let mut egress = RouterAgent::new(RouterId(2), PolicyConfig::new(PolicyKind::Greedy), 1.0, SimTime::from_secs(1.0));
    let s = egress.downstream_accumulate(FLOW, RouterId(1), 4.0, true);
    assert_eq!(s, -4.0);
    let mut mid = agent(PolicyKind::Greedy, &[-4.0]);
    let s = mid.downstream_accumulate(FLOW, RouterId(9), 6.0, false);
    assert_eq!(s, -10.0);
    let reports = mid.report_estimates(SimTime::ZERO);
    assert_eq!(reports.len(), 1);
    assert_eq!((reports[0].upstream, reports[0].estimate), (RouterId(9), -10.0));
    assert!(mid.report_estimates(SimTime::ZERO).is_empty());
}
