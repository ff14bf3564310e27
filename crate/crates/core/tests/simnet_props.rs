use meshfl::simnet::{Jitter, LinkState, Scheduler, SimTime, TransmitOutcome};
use proptest::prelude::*;

proptest! {
    #[test]
    fn links_deliver_in_enqueue_order(
        gaps in prop::collection::vec(0u64..3_000_000, 1..200),
        sizes in prop::collection::vec(1u32..3000, 200),
        jitter in 0.0f64..2.0,
        seed in any::<u64>(),
    ) {
        let mut link = LinkState::new(5e6, 0.5, Jitter::uniform(jitter, seed));
        let mut now = SimTime::ZERO;
        let mut last = SimTime::ZERO;
        for (gap, size) in gaps.iter().zip(&sizes) {
            now += SimTime(*gap);
            match link.transmit(*size, now) {
                TransmitOutcome::Delivered { delay, queuing, transmission } => {
                    let at = now + delay;
                    prop_assert!(at >= last, "overtaken: {:?} < {:?}", at, last);
                    prop_assert!(delay >= queuing + transmission + link.proc_delay());
                    last = at;
                }
                TransmitOutcome::Dropped => prop_assert!(false, "unbounded queue dropped"),
            }
        }
    }

    #[test]
    fn bounded_queue_never_holds_more_than_its_limit(
        gaps in prop::collection::vec(0u64..500_000, 1..300),
        limit in 1usize..8,
    ) {
        let mut link = LinkState::new(2e6, 0.1, Jitter::none()).with_queue_limit(Some(limit));
        let mut now = SimTime::ZERO;
        for gap in gaps {
            now += SimTime(gap);
            let before = link.backlog(now);
            prop_assert!(before <= limit);
            let out = link.transmit(1500, now);
            prop_assert_eq!(matches!(out, TransmitOutcome::Dropped), before == limit);
        }
    }

    #[test]
    fn scheduler_pops_in_time_then_post_order(times in prop::collection::vec(0u64..50, 1..100)) {
        let mut s = Scheduler::new();
        for (i, t) in times.iter().enumerate() {
            s.post(SimTime(*t), i).unwrap();
        }
        let mut prev: Option<(SimTime, usize)> = None;
        while let Some((t, i)) = s.pop() {
            prop_assert_eq!(s.now(), t);
            if let Some((pt, pi)) = prev {
                prop_assert!(t > pt || (t == pt && i > pi));
            }
            prev = Some((t, i));
        }
    }
}

#[test]
fn posting_into_the_past_is_refused() {
    let mut s = Scheduler::new();
    s.post(SimTime(10), ()).unwrap();
    s.pop();
    assert!(s.post(SimTime(9), ()).is_err());
    assert!(s.post(SimTime(10), ()).is_ok());
}

#[test]
fn back_to_back_packets_queue_behind_each_other() {
    // 1500 B at 12 Mbps is 1 ms on the wire
    let mut link = LinkState::new(12e6, 2.0, Jitter::none());
    let delays: Vec<f64> = (0..3)
        .map(|_| match link.transmit(1500, SimTime::ZERO) {
            TransmitOutcome::Delivered { delay, .. } => delay.as_ms(),
            TransmitOutcome::Dropped => unreachable!(),
        })
        .collect();
    assert_eq!(delays, vec![3.0, 4.0, 5.0]);
}
