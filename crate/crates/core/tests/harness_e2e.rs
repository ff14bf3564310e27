use meshfl::harness::{
    compare, emit_metrics, presets, read_rounds, run_experiment, time_to_target, ExperimentConfig, MetricsLog,
    TimelineKind,
};
use meshfl::routing::Protocol;
use meshfl::simnet::SimTime;
use std::collections::BTreeMap;

fn short(name: &str, rounds: u32) -> ExperimentConfig {
    let mut cfg = presets::variant(name).unwrap();
    cfg.fl.max_rounds = rounds;
    cfg.fl.target_loss = None;
    cfg
}

fn at(log: &MetricsLog, round: u32, kind: TimelineKind) -> BTreeMap<String, SimTime> {
    log.timeline
        .iter()
        .filter(|e| e.round == round && e.kind == kind)
        .map(|e| (e.worker.clone().unwrap_or_default(), e.at))
        .collect()
}

#[test]
fn round_time_is_slowest_upload_chain_plus_broadcast() {
    let cfg = short("fig12_distributions/2-5-2/congested", 5).with_protocol(Protocol::RlSoftmax);
    let log = run_experiment(&cfg).unwrap();
    let compute = SimTime::from_ms(
        cfg.fl.local_epochs as f64
            * (cfg.data.samples / 9).div_ceil(cfg.fl.batch_size) as f64
            * cfg.fl.batch_compute_ms,
    );
    for rec in log.rounds.iter().skip(1) {
        let r = rec.round;
        let starts = at(&log, r, TimelineKind::TrainStart);
        let dones = at(&log, r, TimelineKind::TrainDone);
        let delivered = at(&log, r, TimelineKind::LocalModelDelivered);
        let aggregated = at(&log, r, TimelineKind::Aggregated)[""];
        assert_eq!(starts.len(), 9);
        let mut chain = SimTime::ZERO;
        for (w, s) in &starts {
            assert_eq!(dones[w] - *s, compute, "{w} compute time");
            let up = delivered[w] - dones[w];
            assert!((up.as_ms() - rec.worker_e2e_ms[w]).abs() < 1e-6, "{w} uplink disagrees with the record");
            chain = chain.max((*s - rec.start) + compute + up);
        }
        assert_eq!(aggregated, *delivered.values().max().unwrap());
        let broadcast = rec.end - aggregated;
        assert_eq!(rec.end - rec.start, chain + broadcast, "round {r}");
        for g in at(&log, r, TimelineKind::GlobalModelDelivered).values() {
            assert!(*g >= aggregated && *g <= rec.end);
        }
        // barrier: nothing of the next round starts before this one's last upload
        let next = at(&log, r + 1, TimelineKind::TrainStart);
        assert!(next.values().all(|t| *t >= aggregated));
    }
    let first = &log.rounds[0];
    assert!((first.tau_max_ms - first.worker_e2e_ms.values().copied().fold(0.0, f64::max)).abs() == 0.0);
}

#[test]
fn packet_accounting_balances_and_returns_match_delays() {
    let log = run_experiment(&short("fig7_convergence/default/congested", 3).with_protocol(Protocol::RlSoftmax)).unwrap();
    let d = &log.diagnostics;
    assert!(d.alive_at_end > 0, "background traffic should still be in flight");
    assert_eq!(d.injected, d.delivered + d.dropped_ttl + d.dropped_queue + d.alive_at_end);
    assert_eq!(d.loops, 0);
    for f in &log.flows {
        assert!(
            (f.mean_return_ms - f.mean_ms).abs() <= 1e-9 * f.mean_ms.max(1.0),
            "{}: return {} vs delay {}",
            f.flow,
            f.mean_return_ms,
            f.mean_ms
        );
    }
    assert!(log.rounds.windows(2).all(|w| w[0].round < w[1].round));
}

#[test]
fn target_termination_and_time_to_target() {
    let mut cfg = presets::variant("fig7_convergence/default/plain").unwrap();
    cfg.fl.target_loss = Some(1.3);
    let log = run_experiment(&cfg).unwrap();
    let first = log.rounds.iter().position(|r| r.loss <= 1.3).unwrap();
    assert_eq!(log.rounds.len(), first + 1);
    assert_eq!(time_to_target(&log, 1.3), Some(log.rounds[first].end));
    assert_eq!(time_to_target(&log, 10.0), Some(log.rounds[0].end));
    assert_eq!(time_to_target(&log, 0.01), None);
}

#[test]
fn long_run_emits_one_row_per_round_and_round_trips() {
    let cfg = presets::variant("fig8_stragglers/rho0.05-s50/plain").unwrap();
    let log = run_experiment(&cfg).unwrap();
    assert_eq!(log.rounds.len(), 170);
    let dir = tempfile::tempdir().unwrap();
    let (rounds, _) = emit_metrics(&log, dir.path()).unwrap();
    let back = read_rounds(&rounds).unwrap();
    assert_eq!(back.len(), 170);
    for (row, rec) in back.iter().zip(&log.rounds) {
        assert_eq!(row.3.to_bits(), rec.loss.to_bits());
    }
}

#[test]
fn comparison_needs_matching_scenarios() {
    let cfg = short("fig12_distributions/3-3-3/congested", 3);
    let a = run_experiment(&cfg).unwrap();
    let mut other = cfg.with_protocol(Protocol::RlGreedy);
    other.seeds.data += 1;
    let b = run_experiment(&other).unwrap();
    let logs = BTreeMap::from([(Protocol::Baseline, a.clone()), (Protocol::RlGreedy, b)]);
    assert!(compare(&logs, Protocol::Baseline, 2.0).is_err());

    let c = run_experiment(&cfg.with_protocol(Protocol::RlGreedy)).unwrap();
    let logs = BTreeMap::from([(Protocol::Baseline, a), (Protocol::RlGreedy, c)]);
    let rep = compare(&logs, Protocol::Baseline, 2.0).unwrap();
    assert!(rep.curves_equal);
    assert!(rep.entries.iter().all(|e| e.speedup.is_some_and(|s| s > 0.0)));
}

#[test]
fn raw_refining_on_a_mixing_mesh_runs_and_counts_loops() {
    let text = r#"
name = "mixing"
[topology]
server = "SERVER"
routers = ["A", "B", "S", "T"]
links = [["S", "A", 20.0, 1.0], ["S", "B", 20.0, 1.0], ["A", "B", 20.0, 1.0], ["A", "T", 20.0, 1.0], ["B", "T", 20.0, 1.0]]
[topology.hosts]
SERVER = "S"
W1 = "T"
W2 = "T"
[routing]
protocol = "rl-softmax"
dag_filter = false
tau = 50.0
[fl]
model = "logistic"
eta = 0.1
rho = 0.0
batch_size = 20
local_epochs = 1
max_rounds = 20
batch_compute_ms = 10.0
payload_bytes = 30000
[data]
samples = 200
features = 4
classes = 3
separation = 2.0
"#;
    let cfg = ExperimentConfig::from_toml(text).unwrap();
    let log = run_experiment(&cfg).unwrap();
    assert_eq!(log.rounds.len(), 20);
    assert!(log.diagnostics.loops > 0, "near-uniform choice over the mixing spaces should revisit routers");
}

#[test]
fn background_traffic_changes_timing_but_not_learning() {
    let plain = run_experiment(&short("fig12_distributions/2-4-3/plain", 4)).unwrap();
    let congested = run_experiment(&short("fig12_distributions/2-4-3/congested", 4)).unwrap();
    let bits = |l: &MetricsLog| l.losses().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&plain), bits(&congested));
    assert!(congested.rounds.last().unwrap().end > plain.rounds.last().unwrap().end);
}
