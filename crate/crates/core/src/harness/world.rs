use super::config::{derive_seed, ExperimentConfig};
use super::metrics::{
    percentile, FlowSummary, MetricsLog, RoundRecord, TelemetrySample, TimelineEntry, TimelineKind,
};
use super::HarnessError;
use crate::datagen::{assign_stragglers, generate, partition, PartitionSpec, Sample};
use crate::fedcore::{
    build_model, evaluate, AggEvent, AggregatorState, CommMessage, MessageKind, Model, ModelKind, ModelVector,
    Phase, TrainingConfig, WorkerState, WorkerStatus,
};
use crate::routing::{EstimateReport, NextHopTable, Protocol, ReturnAccumulator, Reward, RouterAgent};
use crate::simnet::{
    spawn_background, BackgroundSource, FlowKey, Jitter, LinkState, Packet, PacketKind, Scheduler, SimTime,
    TraceRecord, TransmitOutcome,
};
use crate::topology::{
    build_topology, dag_filter, enumerate_loopfree_paths, refine_action_spaces, EndpointId, RouterId, Topology,
};
use std::collections::{BTreeMap, BTreeSet};

/// Telemetry comparisons kept verbatim in the log; the rest only count.
const TELEMETRY_SAMPLES: usize = 60_000;
/// Rounds between Q-table checkpoints in the log.
const SNAPSHOT_EVERY: u32 = 10;
/// Give up when no federated-learning message moves for this long.
const STALL_LIMIT: SimTime = SimTime(6 * 3600 * 1_000_000_000);

enum Event {
    Arrive { router: RouterId, pkt: Box<Packet> },
    Background(usize),
    ReportTimer(RouterId),
    Reports { to: RouterId, from: RouterId, reports: Vec<EstimateReport> },
    TrainingDone(usize),
    Retransmit(Box<Packet>),
    RoundTimeout(u32),
}

struct MessageState {
    from: EndpointId,
    to: EndpointId,
    msg: CommMessage,
    fragments: u32,
    received: u32,
    sent_at: SimTime,
}

struct BackgroundFlow {
    flow: FlowKey,
    bytes: u32,
    source: BackgroundSource,
}

#[derive(Default)]
struct FlowAcc {
    fl: bool,
    delays: Vec<f64>,
    returns: f64,
}

struct World {
    topo: Topology,
    protocol: Protocol,
    sched: Scheduler<Event>,
    links: Vec<LinkState>,
    table: NextHopTable,
    agents: Vec<RouterAgent>,
    fixed_paths: BTreeMap<FlowKey, Vec<RouterId>>,
    ttl: u32,
    mtu: u32,
    rto: SimTime,
    next_packet: u64,
    next_message: u64,
    messages: BTreeMap<u64, MessageState>,
    background: Vec<BackgroundFlow>,

    server: EndpointId,
    workers: Vec<WorkerState>,
    worker_index: BTreeMap<EndpointId, usize>,
    worker_round: Vec<u32>,
    pending_global: Vec<Option<CommMessage>>,
    registered: BTreeSet<EndpointId>,
    agg: AggregatorState,
    model: Box<dyn Model>,
    samples: Vec<Sample>,
    training: TrainingConfig,
    payload: Option<u64>,
    round_timeout: Option<SimTime>,

    round_start: SimTime,
    round_e2e: BTreeMap<EndpointId, f64>,
    last_progress: SimTime,
    done: bool,
    keep_trace: bool,
    flows: BTreeMap<FlowKey, FlowAcc>,
    log: MetricsLog,
}

/// Runs one scenario to completion.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MetricsLog, HarnessError> {
    cfg.validate()?;
    let mut world = World::build(cfg)?;
    world.run()?;
    Ok(world.finish())
}

impl World {
    fn build(cfg: &ExperimentConfig) -> Result<World, HarnessError> {
        let topo = build_topology(&cfg.topology.graph())?;
        let seeds = cfg.seeds;
        let links = topo
            .links()
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let jitter = if cfg.network.jitter_ms > 0.0 {
                    Jitter::uniform(cfg.network.jitter_ms, derive_seed(seeds.sim, i as u64))
                } else {
                    Jitter::none()
                };
                LinkState::new(l.capacity_bps, l.proc_delay_ms, jitter).with_queue_limit(cfg.network.queue_limit)
            })
            .collect();
        let table = NextHopTable::build(&topo);

        let server = topo.endpoint(&cfg.topology.server)?;
        let worker_ids = cfg
            .worker_names()
            .iter()
            .map(|n| topo.endpoint(n))
            .collect::<Result<Vec<_>, _>>()?;

        // routing agents with action spaces for every model flow
        let protocol = cfg.routing.protocol;
        let mut agents = Vec::new();
        if let Some(policy) = cfg.routing.policy(seeds.rl) {
            let smoothing = cfg.routing.smoothing.unwrap_or(cfg.routing.alpha);
            let period = SimTime::from_secs(cfg.routing.report_period_s);
            agents = topo
                .routers()
                .map(|r| RouterAgent::new(r, policy, smoothing, period))
                .collect();
            let rc = cfg.routing.refine(topo.router_count());
            for &w in &worker_ids {
                for flow in [FlowKey::new(w, server)?, FlowKey::new(server, w)?] {
                    let (ingress, egress) = (topo.attachment(flow.src), topo.attachment(flow.dst));
                    if ingress == egress {
                        continue;
                    }
                    let paths = enumerate_loopfree_paths(&topo, ingress, egress, &rc)?;
                    let mut asm = refine_action_spaces(&paths)?;
                    if rc.dag_filter {
                        asm = dag_filter(&asm, &topo, ingress, egress)?;
                    }
                    for (router, acts) in asm.for_pair(ingress, egress) {
                        agents[router.index()].set_actions(flow, acts);
                    }
                }
            }
        }

        let mut background = Vec::new();
        let mut fixed_paths = BTreeMap::new();
        for (i, b) in cfg.background.iter().enumerate() {
            let flow = FlowKey::new(topo.endpoint(&b.src)?, topo.endpoint(&b.dst)?)?;
            if let Some(path) = &b.path {
                let ids = path.iter().map(|n| topo.router(n)).collect::<Result<Vec<_>, _>>()?;
                let ok = ids.first() == Some(&topo.attachment(flow.src))
                    && ids.last() == Some(&topo.attachment(flow.dst))
                    && ids.windows(2).all(|p| topo.are_neighbors(p[0], p[1]));
                if !ok {
                    return Err(HarnessError::Config(format!(
                        "background path {path:?} does not connect {} to {}",
                        b.src, b.dst
                    )));
                }
                fixed_paths.insert(flow, ids);
            }
            background.push(BackgroundFlow {
                flow,
                bytes: b.packet_bytes,
                source: spawn_background(b.rate_pps, derive_seed(seeds.sim, 10_000 + i as u64)),
            });
        }

        // data, model and federated participants
        let d = &cfg.data;
        let ds = generate(d.samples, d.features, d.classes, d.separation, derive_seed(seeds.data, 1))?;
        let k = worker_ids.len();
        let spec = PartitionSpec {
            mode: d.partition,
            beta: d.dirichlet_beta,
            workers: k,
            min_shard: cfg.fl.batch_size,
        };
        let shards = partition(&ds, &spec, derive_seed(seeds.data, 2))?;
        let epochs = if !cfg.fl.epochs_per_worker.is_empty() {
            cfg.fl.epochs_per_worker.clone()
        } else if let Some(s) = &cfg.fl.stragglers {
            assign_stragglers(k, s, derive_seed(seeds.data, 3))?
        } else {
            vec![cfg.fl.local_epochs; k]
        };
        let model = build_model(cfg.fl.model, d.features, d.classes, cfg.fl.hidden);
        let payload = match (cfg.fl.model, cfg.fl.payload_bytes) {
            (_, Some(b)) => Some(b),
            (ModelKind::SyntheticPayload, None) => {
                return Err(HarnessError::Config("synthetic-payload model needs payload_bytes".into()))
            }
            _ => None,
        };
        let initial = ModelVector::new(model.init(seeds.model)).with_payload_override(payload);
        let mut agg = AggregatorState::new(initial.clone(), cfg.fl.batch_size);
        let mut workers = Vec::with_capacity(k);
        let mut worker_index = BTreeMap::new();
        for (i, (&id, shard)) in worker_ids.iter().zip(shards).enumerate() {
            let ws = WorkerState::new(
                id,
                topo.attachment(id),
                shard.indices,
                epochs[i],
                initial.clone(),
                derive_seed(seeds.data, 100 + i as u64),
            )?;
            agg.register(id, ws.n_k(), ws.epochs)?;
            worker_index.insert(id, i);
            workers.push(ws);
        }

        let ttl = cfg.network.ttl.unwrap_or(4 * topo.router_count() as u32);
        let log = MetricsLog::empty(&cfg.name, protocol, cfg.fingerprint());
        Ok(World {
            protocol,
            sched: Scheduler::new(),
            links,
            table,
            agents,
            fixed_paths,
            ttl,
            mtu: cfg.network.mtu_bytes,
            rto: SimTime::from_ms(cfg.network.retransmit_timeout_ms),
            next_packet: 0,
            next_message: 0,
            messages: BTreeMap::new(),
            background,
            server,
            worker_round: vec![0; k],
            pending_global: vec![None; k],
            workers,
            worker_index,
            registered: BTreeSet::new(),
            agg,
            model,
            samples: ds.samples,
            training: cfg.fl.training(),
            payload,
            round_timeout: cfg.fl.round_timeout_ms.filter(|_| cfg.fl.drop_stragglers).map(SimTime::from_ms),
            round_start: SimTime::ZERO,
            round_e2e: BTreeMap::new(),
            last_progress: SimTime::ZERO,
            done: false,
            keep_trace: cfg.network.trace,
            flows: BTreeMap::new(),
            log,
            topo,
        })
    }

    fn run(&mut self) -> Result<(), HarnessError> {
        for i in 0..self.workers.len() {
            let id = self.workers[i].id;
            self.send(id, self.server, CommMessage::stub(MessageKind::Register, 0))?;
        }
        for i in 0..self.background.len() {
            if let Some(t) = self.background[i].source.next_arrival() {
                self.sched.post(t, Event::Background(i))?;
            }
        }
        if !self.agents.is_empty() {
            for r in self.topo.routers() {
                let period = self.agents[r.index()].report_period();
                self.sched.post(period, Event::ReportTimer(r))?;
            }
        }
        while !self.done {
            let Some((now, ev)) = self.sched.pop() else {
                return Err(HarnessError::Runtime("event queue drained before the run finished".into()));
            };
            self.log.diagnostics.events += 1;
            if now.saturating_sub(self.last_progress) > STALL_LIMIT {
                return Err(HarnessError::Runtime(format!(
                    "no federated-learning progress since {}",
                    self.last_progress
                )));
            }
            match ev {
                Event::Arrive { router, pkt } => self.arrive(router, pkt)?,
                Event::Background(i) => {
                    let b = &mut self.background[i];
                    let (flow, bytes) = (b.flow, b.bytes);
                    if let Some(t) = b.source.next_arrival() {
                        self.sched.post(t, Event::Background(i))?;
                    }
                    let pkt = self.packet(flow, PacketKind::Background, bytes);
                    self.inject(pkt)?;
                }
                Event::ReportTimer(r) => self.report(r)?,
                Event::Reports { to, from, reports } => {
                    for rep in reports {
                        self.agents[to.index()].update_q(rep.flow, from, rep.estimate)?;
                    }
                }
                Event::TrainingDone(k) => self.training_done(k)?,
                Event::Retransmit(pkt) => {
                    self.log.diagnostics.retransmissions += 1;
                    self.inject(*pkt)?;
                }
                Event::RoundTimeout(round) => {
                    if self.agg.round == round && self.agg.phase() == Phase::Collecting && !self.agg.fresh.is_empty() {
                        let mut out = Vec::new();
                        self.agg.aggregate_fresh(&mut out)?;
                        self.timeline(round, None, TimelineKind::Aggregated);
                        self.flush(out)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn finish(mut self) -> MetricsLog {
        self.log.diagnostics.alive_at_end =
            self.sched.drain().filter(|e| matches!(e, Event::Arrive { .. })).count() as u64;
        let names: Vec<String> = self.topo.endpoints().map(|e| self.topo.endpoint_name(e).to_string()).collect();
        for (flow, mut acc) in std::mem::take(&mut self.flows) {
            acc.delays.sort_by(f64::total_cmp);
            let n = acc.delays.len();
            let mean = acc.delays.iter().sum::<f64>() / n as f64;
            self.log.flows.push(FlowSummary {
                flow: format!("{}->{}", names[flow.src.index()], names[flow.dst.index()]),
                fl: acc.fl,
                packets: n as u64,
                mean_ms: mean,
                p50_ms: percentile(&acc.delays, 50.0),
                p95_ms: percentile(&acc.delays, 95.0),
                p99_ms: percentile(&acc.delays, 99.0),
                mean_return_ms: acc.returns / n as f64,
            });
        }
        let last = self.agg.round;
        if !self.agents.is_empty() && self.log.snapshots.last().map(|s| s.0) != Some(last) {
            self.log.snapshots.push((last, self.agents.iter().map(RouterAgent::snapshot).collect()));
        }
        self.log
    }

    fn timeline(&mut self, round: u32, worker: Option<EndpointId>, kind: TimelineKind) {
        let worker = worker.map(|w| self.topo.endpoint_name(w).to_string());
        self.log.timeline.push(TimelineEntry {
            at: self.sched.now(),
            round,
            worker,
            kind,
        });
    }

    // ---- packet layer

    fn packet(&mut self, flow: FlowKey, kind: PacketKind, bytes: u32) -> Packet {
        self.next_packet += 1;
        Packet {
            id: self.next_packet,
            flow,
            kind,
            payload_bytes: bytes,
            ingress: self.topo.attachment(flow.src),
            egress: self.topo.attachment(flow.dst),
            telemetry: None,
            hop_trace: Vec::new(),
            ttl: self.ttl,
            injected_at: SimTime::ZERO,
            hop_delay: None,
            ret: ReturnAccumulator::default(),
        }
    }

    /// Hands a packet to its ingress router; host links are free.
    fn inject(&mut self, mut pkt: Packet) -> Result<(), HarnessError> {
        self.log.diagnostics.injected += 1;
        pkt.injected_at = self.sched.now();
        let router = pkt.ingress;
        self.sched.post(self.sched.now(), Event::Arrive { router, pkt: Box::new(pkt) })?;
        Ok(())
    }

    fn arrive(&mut self, r: RouterId, mut pkt: Box<Packet>) -> Result<(), HarnessError> {
        let now = self.sched.now();
        if pkt.telemetry.is_some() {
            let (measured, header) = pkt.pop_telemetry(now)?;
            let engine = pkt.hop_delay.take().unwrap_or(SimTime::ZERO);
            let d = &mut self.log.diagnostics;
            d.telemetry_hops += 1;
            if measured != engine {
                d.telemetry_mismatches += 1;
            }
            if self.log.telemetry.len() < TELEMETRY_SAMPLES {
                self.log.telemetry.push(TelemetrySample {
                    packet: pkt.id,
                    engine,
                    measured,
                });
            }
            pkt.ret.add(Reward::from_delay(measured));
            if !self.agents.is_empty() {
                self.agents[r.index()].downstream_accumulate(pkt.flow, header.sender, measured.as_ms(), r == pkt.egress);
            }
        } else if let Some(engine) = pkt.hop_delay.take() {
            pkt.ret.add(Reward::from_delay(engine));
        }
        pkt.hop_trace.push((r, now));
        if self.keep_trace {
            self.log.trace.push(TraceRecord {
                packet: pkt.id,
                hop: pkt.hop_trace.len() - 1,
                router: self.topo.router_name(r).to_string(),
                arrival_ms: now.as_ms(),
            });
        }
        if r == pkt.egress {
            return self.deliver(*pkt);
        }
        pkt.ttl = pkt.ttl.saturating_sub(1);
        if pkt.ttl == 0 {
            self.log.diagnostics.dropped_ttl += 1;
            return self.dropped(*pkt);
        }
        let next = self.next_hop(r, &pkt)?;
        let lid = self.topo.link_id(r, next).expect("next hop is a neighbor");
        match self.links[lid].transmit(pkt.payload_bytes, now) {
            TransmitOutcome::Delivered { delay, .. } => {
                pkt.hop_delay = Some(delay);
                if pkt.is_fl() {
                    pkt.stamp_telemetry(r, now)?;
                }
                self.sched.post(now + delay, Event::Arrive { router: next, pkt })?;
            }
            TransmitOutcome::Dropped => {
                self.log.diagnostics.dropped_queue += 1;
                self.dropped(*pkt)?;
            }
        }
        Ok(())
    }

    fn next_hop(&mut self, r: RouterId, pkt: &Packet) -> Result<RouterId, HarnessError> {
        let now = self.sched.now();
        if pkt.is_fl() && self.protocol.is_rl() {
            return Ok(self.agents[r.index()].select_action(pkt.flow, now)?);
        }
        if let Some(path) = self.fixed_paths.get(&pkt.flow) {
            let pos = path.iter().position(|x| *x == r).ok_or_else(|| {
                HarnessError::Runtime(format!("background packet strayed to {}", self.topo.router_name(r)))
            })?;
            return Ok(path[pos + 1]);
        }
        Ok(crate::routing::baseline_next_hop(&self.table, r, pkt.egress)?)
    }

    fn dropped(&mut self, pkt: Packet) -> Result<(), HarnessError> {
        if pkt.revisited_router() {
            self.log.diagnostics.loops += 1;
        }
        if pkt.is_fl() {
            // resend the fragment from its source after the timeout
            let mut again = self.packet(pkt.flow, pkt.kind, pkt.payload_bytes);
            again.ttl = self.ttl;
            self.sched.post(self.sched.now() + self.rto, Event::Retransmit(Box::new(again)))?;
        }
        Ok(())
    }

    fn deliver(&mut self, pkt: Packet) -> Result<(), HarnessError> {
        let now = self.sched.now();
        self.log.diagnostics.delivered += 1;
        if pkt.revisited_router() {
            self.log.diagnostics.loops += 1;
        }
        let acc = self.flows.entry(pkt.flow).or_default();
        acc.fl = pkt.is_fl();
        acc.delays.push((now - pkt.injected_at).as_ms());
        acc.returns += -pkt.ret.value();
        if let PacketKind::Fl { message, .. } = pkt.kind {
            let m = self.messages.get_mut(&message).expect("fragment of a live message");
            m.received += 1;
            if m.received == m.fragments {
                let m = self.messages.remove(&message).expect("present");
                self.last_progress = now;
                self.on_message(m)?;
            }
        }
        Ok(())
    }

    /// Fragments `msg` at the MTU and injects every fragment at once.
    fn send(&mut self, from: EndpointId, to: EndpointId, msg: CommMessage) -> Result<(), HarnessError> {
        let bytes = msg.payload_bytes();
        let mtu = self.mtu as u64;
        let fragments = bytes.div_ceil(mtu).max(1) as u32;
        self.next_message += 1;
        let id = self.next_message;
        self.messages.insert(
            id,
            MessageState {
                from,
                to,
                msg,
                fragments,
                received: 0,
                sent_at: self.sched.now(),
            },
        );
        let flow = FlowKey::new(from, to)?;
        for f in 0..fragments {
            let size = (bytes - f as u64 * mtu).min(mtu) as u32;
            let pkt = self.packet(flow, PacketKind::Fl { message: id, fragment: f }, size);
            self.inject(pkt)?;
        }
        Ok(())
    }

    fn report(&mut self, r: RouterId) -> Result<(), HarnessError> {
        let now = self.sched.now();
        let mut by_upstream: BTreeMap<RouterId, Vec<EstimateReport>> = BTreeMap::new();
        for rep in self.agents[r.index()].report_estimates(now) {
            by_upstream.entry(rep.upstream).or_default().push(rep);
        }
        for (up, reports) in by_upstream {
            let lid = self.topo.link_id(r, up).expect("upstream is a neighbor");
            let delay = match self.links[lid].transmit(0, now) {
                TransmitOutcome::Delivered { delay, .. } => delay,
                TransmitOutcome::Dropped => continue,
            };
            self.sched.post(now + delay, Event::Reports { to: up, from: r, reports })?;
        }
        let period = self.agents[r.index()].report_period();
        self.sched.post(now + period, Event::ReportTimer(r))?;
        Ok(())
    }

    // ---- federated learning

    fn flush(&mut self, out: Vec<(EndpointId, CommMessage)>) -> Result<(), HarnessError> {
        for (to, msg) in out {
            self.send(self.server, to, msg)?;
        }
        Ok(())
    }

    fn begin_round(&mut self) -> Result<(), HarnessError> {
        let mut out = Vec::new();
        let round = self.agg.start_round(&mut out)?;
        self.round_start = self.sched.now();
        self.round_e2e.clear();
        self.flush(out)?;
        if let (Some(t), true) = (self.round_timeout, round > 1) {
            self.sched.post(self.sched.now() + t, Event::RoundTimeout(round))?;
        }
        Ok(())
    }

    fn end_round(&mut self, round: u32) -> Result<(), HarnessError> {
        let now = self.sched.now();
        self.timeline(round, None, TimelineKind::RoundComplete);
        let (loss, accuracy) = evaluate(self.model.as_ref(), &self.agg.global, &self.samples)?;
        let worker_e2e_ms: BTreeMap<String, f64> = self
            .round_e2e
            .iter()
            .map(|(w, d)| (self.topo.endpoint_name(*w).to_string(), *d))
            .collect();
        let tau_max_ms = worker_e2e_ms.values().copied().fold(0.0, f64::max);
        let mean_e2e_ms = if worker_e2e_ms.is_empty() {
            0.0
        } else {
            worker_e2e_ms.values().sum::<f64>() / worker_e2e_ms.len() as f64
        };
        self.log.rounds.push(RoundRecord {
            round,
            start: self.round_start,
            end: now,
            loss,
            accuracy,
            worker_e2e_ms,
            tau_max_ms,
            mean_e2e_ms,
        });
        if !self.agents.is_empty() && round.is_multiple_of(SNAPSHOT_EVERY) {
            self.log.snapshots.push((round, self.agents.iter().map(RouterAgent::snapshot).collect()));
        }
        let reached = self.training.target_loss.is_some_and(|t| loss <= t);
        if round >= self.training.max_rounds || reached {
            self.done = true;
            return Ok(());
        }
        self.begin_round()
    }

    fn on_message(&mut self, m: MessageState) -> Result<(), HarnessError> {
        let now = self.sched.now();
        let e2e = (now - m.sent_at).as_ms();
        if m.to == self.server {
            let msg = m.msg;
            if msg.kind == MessageKind::Register {
                self.registered.insert(m.from);
                if self.registered.len() == self.workers.len() {
                    self.begin_round()?;
                }
                return Ok(());
            }
            if msg.kind == MessageKind::LocalModel && msg.round == self.agg.round {
                self.round_e2e.insert(m.from, e2e);
                self.timeline(msg.round, Some(m.from), TimelineKind::LocalModelDelivered);
            }
            let mut out = Vec::new();
            let ev = self.agg.on_message(m.from, msg, &mut out)?;
            if let AggEvent::Aggregated { round } = ev {
                self.timeline(round, None, TimelineKind::Aggregated);
            }
            self.flush(out)?;
            if let AggEvent::RoundComplete { round } = ev {
                self.end_round(round)?;
            }
            return Ok(());
        }

        let k = *self
            .worker_index
            .get(&m.to)
            .ok_or_else(|| HarnessError::Runtime("message for an unknown endpoint".into()))?;
        let round = m.msg.round;
        match m.msg.kind {
            MessageKind::GlobalModel => {
                self.timeline(round, Some(m.to), TimelineKind::GlobalModelDelivered);
                if round == 1 {
                    self.round_e2e.insert(m.to, e2e);
                }
                if self.workers[k].status == WorkerStatus::Idle {
                    self.accept_global(k, m.msg)?;
                } else {
                    self.pending_global[k] = Some(m.msg);
                }
            }
            MessageKind::TrainRequest => {
                let ws = &mut self.workers[k];
                if let Some((epochs, _)) = m.msg.train {
                    ws.epochs = epochs;
                }
                ws.start_training()?;
                let done = ws.compute_time(self.training.batch_size, self.training.batch_compute_ms);
                self.worker_round[k] = round;
                self.timeline(round, Some(m.to), TimelineKind::TrainStart);
                self.sched.post(now + done, Event::TrainingDone(k))?;
            }
            MessageKind::LocalModelRecv => {
                self.workers[k].acknowledged()?;
                if let Some(g) = self.pending_global[k].take() {
                    self.accept_global(k, g)?;
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn accept_global(&mut self, k: usize, msg: CommMessage) -> Result<(), HarnessError> {
        let model = msg.model.as_ref().expect("global model message carries a model");
        self.workers[k].receive_global(model)?;
        let id = self.workers[k].id;
        self.send(id, self.server, CommMessage::stub(MessageKind::GlobalModelRecv, msg.round))
    }

    fn training_done(&mut self, k: usize) -> Result<(), HarnessError> {
        self.last_progress = self.sched.now();
        let round = self.worker_round[k];
        let ws = &mut self.workers[k];
        let mut local = ws.finish_training(self.model.as_ref(), &self.samples, &self.training)?;
        local.timestamp = self.sched.now();
        local = local.with_payload_override(self.payload);
        let id = ws.id;
        self.timeline(round, Some(id), TimelineKind::TrainDone);
        self.send(id, self.server, CommMessage::with_model(MessageKind::LocalModel, round, local))
    }
}
