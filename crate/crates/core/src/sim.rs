//! End-to-end run orchestration: wires senders, the switch, the installed
//! queue-management algorithm and the receivers onto one event queue and
//! produces the exported summary, series and waste ledger.

use crate::aqm::{self, AqmAlgorithm};
use crate::engine::{EventKind, EventQueue, Rng, RunStats, TimerKind};
use crate::metrics::{
    jain_index, ClassCounts, RunSummary, SeriesBucket, SeriesRecorder, WasteLedger,
};
use crate::model::{
    ConfigError, FlowId, Packet, PortId, QueueId, ScenarioConfig, SimTime, TrafficClass,
};
use crate::switch::{EgressOutcome, EnqueueResult, IngressVerdict, Switch, SwitchCounters};
use crate::workload::{phase_at, phase_spawn_deltas, SinusoidSampler};
use crate::hosts::{FlowState, GrowthMode};

/// Flow id space reserved for background (sinusoid) arrivals: no endpoint
/// state, no ACKs.
const BACKGROUND_FLOW: FlowId = FlowId(u32::MAX);

const RECIRC_LATENCY: SimTime = SimTime::from_micros(1);

/// Everything a finished run hands back.
pub struct RunOutput {
    pub summary: RunSummary,
    pub series: Vec<SeriesBucket>,
    pub stats: RunStats,
    pub ledger: WasteLedger,
    pub counters: SwitchCounters,
    /// Packets still queued in the Traffic Manager when the horizon hit.
    pub in_flight_at_end: u64,
}

struct Sender {
    cc: FlowState,
    /// Next fresh sequence number.
    next_seq: u64,
    /// Cumulative ACK point: everything below is acknowledged.
    highest_acked: u64,
    dup_acks: u32,
    /// Dup-ACK recovery is re-armed only past this sequence.
    recover_seq: u64,
    rto_epoch: u64,
    /// Receiver side: next expected in-order sequence.
    rcv_next: u64,
    delivered_bytes: u64,
}

pub struct Simulation {
    cfg: ScenarioConfig,
    switch: Switch,
    aqm: Box<dyn AqmAlgorithm>,
    rng: Rng,
    ledger: WasteLedger,
    recorder: SeriesRecorder,
    flows: Vec<Sender>,
    sampler: Option<SinusoidSampler>,
    bg_seq: u64,
    /// Freshest classic-queue delay observation, fed to the control-plane
    /// timer.
    last_classic_delay: SimTime,
    /// Per-phase delivered bytes, [classic, scalable].
    phase_bytes: Vec<[u64; 2]>,
    rto: SimTime,
}

impl Simulation {
    pub fn new(cfg: &ScenarioConfig) -> Result<Simulation, ConfigError> {
        cfg.validate()?;
        let aqm = aqm::create(&cfg.aqm, cfg.bandwidth_bps())?;
        let ghost = cfg.aqm.kind.requires_ghost();
        let port = cfg.bottleneck_port();
        // coarse timeout: twice the worst path RTT (base + full buffer)
        let buffer_delay =
            SimTime::from_nanos(cfg.queue_capacity() * 8 * 1_000_000_000 / cfg.bandwidth_bps());
        let rto = (cfg.rtt() + buffer_delay).mul_f64(2.0);
        Ok(Simulation {
            cfg: cfg.clone(),
            switch: Switch::new(&[port], ghost, cfg.starvation_guard),
            aqm,
            rng: Rng::new(cfg.seed),
            ledger: WasteLedger::new(),
            recorder: SeriesRecorder::new(),
            flows: Vec::new(),
            sampler: cfg.sinusoid.map(SinusoidSampler::new),
            bg_seq: 0,
            last_classic_delay: SimTime::ZERO,
            phase_bytes: vec![[0, 0]; cfg.load_phases.len()],
            rto,
        })
    }

    pub fn run(mut self) -> Result<RunOutput, ConfigError> {
        let mut q = EventQueue::new();
        self.prime(&mut q);
        let t_end = SimTime::from_secs(self.cfg.duration_s);
        let stats = {
            let sim = &mut self;
            q.run_until(t_end, |q, ev| sim.handle(q, ev))
        };
        Ok(self.finish(stats))
    }

    /// Same as [`Simulation::run`] with the event trace mirrored to `w`.
    pub fn run_traced(mut self, w: Box<dyn std::io::Write>) -> Result<RunOutput, ConfigError> {
        let mut q = EventQueue::new();
        q.set_trace_writer(w);
        self.prime(&mut q);
        let t_end = SimTime::from_secs(self.cfg.duration_s);
        let stats = {
            let sim = &mut self;
            q.run_until(t_end, |q, ev| sim.handle(q, ev))
        };
        Ok(self.finish(stats))
    }

    fn prime(&mut self, q: &mut EventQueue) {
        for (phase, lp) in self.cfg.load_phases.iter().enumerate() {
            q.schedule(SimTime::from_secs(lp.start_s), EventKind::FlowStart { phase })
                .expect("phase start within horizon");
        }
        q.schedule(SimTime::from_secs(1), EventKind::TimerFire(TimerKind::SeriesTick))
            .expect("first tick");
        if let Some(iv) = self.aqm.timer_interval() {
            q.schedule(iv, EventKind::TimerFire(TimerKind::AqmUpdate))
                .expect("first aqm tick");
        }
        if self.sampler.is_some() {
            q.schedule(SimTime::ZERO, EventKind::TimerFire(TimerKind::BackgroundArrival))
                .expect("first background arrival");
        }
    }

    fn handle(&mut self, q: &mut EventQueue, ev: crate::engine::Event) {
        match ev.kind {
            EventKind::FlowStart { phase } => self.on_flow_start(q, phase),
            EventKind::PacketArrival(pkt) => self.on_arrival(q, pkt),
            EventKind::Dequeue { port } => self.on_dequeue(q, port),
            EventKind::AckDelivery { flow, ack_no, marked } => {
                self.on_ack(q, flow, ack_no, marked)
            }
            EventKind::TimerFire(TimerKind::Rto { flow, epoch }) => self.on_rto(q, flow, epoch),
            EventKind::TimerFire(TimerKind::SeriesTick) => self.on_series_tick(q),
            EventKind::TimerFire(TimerKind::AqmUpdate) => self.on_aqm_tick(q),
            EventKind::TimerFire(TimerKind::BackgroundArrival) => self.on_background(q),
        }
    }

    fn on_flow_start(&mut self, q: &mut EventQueue, phase: usize) {
        let deltas = phase_spawn_deltas(&self.cfg.load_phases);
        let (_, new_classic, new_scalable) = deltas[phase];
        let mut stagger = 0u64;
        for class in [TrafficClass::Classic, TrafficClass::Scalable] {
            let n = match class {
                TrafficClass::Classic => new_classic,
                TrafficClass::Scalable => new_scalable,
            };
            for _ in 0..n {
                let fid = FlowId(self.flows.len() as u32);
                self.flows.push(Sender {
                    cc: FlowState::new(
                        fid,
                        class,
                        GrowthMode::Reno,
                        self.cfg.rtt(),
                        self.cfg.mss_bytes(),
                    ),
                    next_seq: 0,
                    highest_acked: 0,
                    dup_acks: 0,
                    recover_seq: 0,
                    rto_epoch: 0,
                    rcv_next: 0,
                    delivered_bytes: 0,
                });
                // stagger starts 1 ms apart so phase cohorts do not move in
                // lockstep; the flow's first Rto fire doubles as its kick-off
                q.schedule_in(
                    SimTime::from_millis(stagger),
                    EventKind::TimerFire(TimerKind::Rto { flow: fid, epoch: 0 }),
                );
                stagger += 1;
            }
        }
    }

    fn outstanding(&self, fid: FlowId) -> u64 {
        let s = &self.flows[fid.0 as usize];
        s.next_seq - s.highest_acked
    }

    fn send_window(&mut self, q: &mut EventQueue, fid: FlowId) {
        let now = q.now();
        let (class, mtu) = {
            let s = &self.flows[fid.0 as usize];
            (s.cc.class, self.cfg.mtu_bytes)
        };
        loop {
            let s = &mut self.flows[fid.0 as usize];
            if s.next_seq - s.highest_acked >= s.cc.window_packets() as u64 {
                break;
            }
            let seq = s.next_seq;
            s.next_seq += 1;
            let pkt = Packet::data(seq, fid, class, mtu, now);
            q.schedule_in(SimTime::ZERO, EventKind::PacketArrival(pkt));
        }
    }

    fn arm_rto(&mut self, q: &mut EventQueue, fid: FlowId) {
        let s = &mut self.flows[fid.0 as usize];
        s.rto_epoch += 1;
        let epoch = s.rto_epoch;
        let rto = self.rto;
        q.schedule_in(rto, EventKind::TimerFire(TimerKind::Rto { flow: fid, epoch }));
    }

    fn on_arrival(&mut self, q: &mut EventQueue, mut pkt: Packet) {
        pkt.ingress_tstamp = q.now();
        match self
            .switch
            .ingress_process(pkt, self.aqm.as_mut(), &mut self.rng, &mut self.ledger)
        {
            IngressVerdict::ForwardToTm { pkt, port, queue } => {
                if self.switch.tm_enqueue(pkt, port, queue, self.aqm.kind(), &mut self.ledger)
                    == EnqueueResult::Accepted
                {
                    self.kick_port(q, port);
                }
            }
            IngressVerdict::Drop(_) | IngressVerdict::ConsumeNotification => {}
        }
    }

    fn kick_port(&mut self, q: &mut EventQueue, port: PortId) {
        if self.switch.dequeue_scheduled(port) || !self.switch.has_backlog(port) {
            return;
        }
        let at = self.switch.port_busy_until(port).max(q.now());
        self.switch.set_dequeue_scheduled(port, true);
        q.schedule(at, EventKind::Dequeue { port }).expect("dequeue not in past");
    }

    fn on_dequeue(&mut self, q: &mut EventQueue, port: PortId) {
        self.switch.set_dequeue_scheduled(port, false);
        let now = q.now();
        let Some(pkt) = self.switch.tm_dequeue(port, now) else {
            return;
        };
        let delay = now - pkt.ingress_tstamp;
        self.recorder.record_delay(delay);
        if pkt.class == TrafficClass::Classic {
            self.last_classic_delay = delay;
        }
        let gap = self.switch.serialization_delay(port, pkt.size_bytes);
        self.switch.set_port_busy_until(port, now + gap);
        match self.switch.egress_process(
            pkt,
            self.aqm.as_mut(),
            &mut self.rng,
            &mut self.ledger,
            now,
        ) {
            EgressOutcome::Deliver(pkt) => self.deliver(q, pkt),
            EgressOutcome::DeliverAndNotify(pkt, notif) => {
                q.schedule_in(RECIRC_LATENCY, EventKind::PacketArrival(notif));
                self.deliver(q, pkt);
            }
            EgressOutcome::Dropped => {}
        }
        self.kick_port(q, port);
    }

    fn deliver(&mut self, q: &mut EventQueue, pkt: Packet) {
        self.recorder.record_delivery(pkt.class, pkt.size_bytes as u64);
        if pkt.flow == BACKGROUND_FLOW {
            return;
        }
        let now_s = q.now().as_secs_f64() as u64;
        if let Some(ph) = phase_at(&self.cfg.load_phases, now_s) {
            let slot = match pkt.class {
                TrafficClass::Classic => 0,
                TrafficClass::Scalable => 1,
            };
            self.phase_bytes[ph][slot] += pkt.size_bytes as u64;
        }
        let s = &mut self.flows[pkt.flow.0 as usize];
        if pkt.id == s.rcv_next {
            s.rcv_next += 1;
            s.delivered_bytes += s.cc.mss as u64;
        }
        // cumulative ACK, delayed by the base RTT, echoing the codepoint
        let ack = EventKind::AckDelivery {
            flow: pkt.flow,
            ack_no: s.rcv_next,
            marked: pkt.ecn == crate::model::EcnCodepoint::Ce,
        };
        let rtt = self.cfg.rtt();
        q.schedule_in(rtt, ack);
    }

    fn on_ack(&mut self, q: &mut EventQueue, fid: FlowId, ack_no: u64, marked: bool) {
        let trigger_recovery = {
            let s = &mut self.flows[fid.0 as usize];
            if ack_no > s.highest_acked {
                let newly = (ack_no - s.highest_acked) as u32;
                s.highest_acked = ack_no;
                if s.next_seq < ack_no {
                    s.next_seq = ack_no;
                }
                s.dup_acks = 0;
                s.cc.on_ack(newly, marked);
                false
            } else {
                s.dup_acks += 1;
                s.dup_acks >= crate::hosts::DUP_ACK_THRESHOLD && s.highest_acked >= s.recover_seq
            }
        };
        if trigger_recovery {
            let s = &mut self.flows[fid.0 as usize];
            s.cc.on_loss();
            s.recover_seq = s.next_seq;
            // go back to the gap: resend everything past the ACK point
            s.next_seq = s.highest_acked;
            s.dup_acks = 0;
        }
        self.arm_rto(q, fid);
        self.send_window(q, fid);
    }

    fn on_rto(&mut self, q: &mut EventQueue, fid: FlowId, epoch: u64) {
        {
            let s = &self.flows[fid.0 as usize];
            if epoch != s.rto_epoch {
                return; // superseded timer
            }
        }
        if self.outstanding(fid) > 0 {
            let s = &mut self.flows[fid.0 as usize];
            s.cc.on_loss();
            s.recover_seq = s.next_seq;
            s.next_seq = s.highest_acked;
            s.dup_acks = 0;
        }
        self.arm_rto(q, fid);
        self.send_window(q, fid);
    }

    fn on_series_tick(&mut self, q: &mut EventQueue) {
        let t_s = q.now().as_secs_f64().round() as u64;
        let classic = self.switch.queue_depth(PortId(0), QueueId(0));
        let l4s = self.switch.queue_depth(PortId(0), QueueId(1));
        self.recorder.tick(t_s, classic, l4s);
        if t_s < self.cfg.duration_s {
            q.schedule_in(SimTime::from_secs(1), EventKind::TimerFire(TimerKind::SeriesTick));
        }
    }

    fn on_aqm_tick(&mut self, q: &mut EventQueue) {
        let sample = if self.switch.queue_len_packets(PortId(0), QueueId(0)) == 0 {
            SimTime::ZERO
        } else {
            self.last_classic_delay
        };
        self.aqm.timer_hook(q.now(), sample);
        if let Some(iv) = self.aqm.timer_interval() {
            q.schedule_in(iv, EventKind::TimerFire(TimerKind::AqmUpdate));
        }
    }

    fn on_background(&mut self, q: &mut EventQueue) {
        let Some(sampler) = &self.sampler else { return };
        let mut pkt = Packet::data(
            self.bg_seq,
            BACKGROUND_FLOW,
            TrafficClass::Classic,
            self.cfg.mtu_bytes,
            q.now(),
        );
        pkt.output_port = PortId(0);
        self.bg_seq += 1;
        q.schedule_in(SimTime::ZERO, EventKind::PacketArrival(pkt));
        if let Some(next) = sampler.next_arrival(q.now(), &mut self.rng) {
            if next <= SimTime::from_secs(self.cfg.duration_s) {
                let kind = EventKind::TimerFire(TimerKind::BackgroundArrival);
                q.schedule(next, kind).expect("arrival after now");
            }
        }
    }

    fn finish(self, stats: RunStats) -> RunOutput {
        let in_flight_at_end = self.switch.in_flight_packets();
        let c = &self.switch.counters;
        let dur = self.cfg.duration_s as f64;
        let phase_starts: Vec<u64> = self.cfg.load_phases.iter().map(|p| p.start_s).collect();
        let mut jain_per_phase = Vec::new();
        for (i, bytes) in self.phase_bytes.iter().enumerate() {
            let end = phase_starts.get(i + 1).copied().unwrap_or(self.cfg.duration_s);
            let len = (end - phase_starts[i]).max(1) as f64;
            let rates = [bytes[0] as f64 / len, bytes[1] as f64 / len];
            jain_per_phase.push(jain_index(&rates).unwrap_or(0.0));
        }
        let classic_bytes: u64 = self.phase_bytes.iter().map(|b| b[0]).sum();
        let scalable_bytes: u64 = self.phase_bytes.iter().map(|b| b[1]).sum();
        let summary = RunSummary {
            scenario: self.cfg.name.clone(),
            aqm: self.cfg.aqm.kind.key().to_string(),
            seed: self.cfg.seed,
            duration_s: dur,
            injected: c.injected,
            delivered: c.delivered,
            ingress_aqm_drops: c.ingress_aqm_drops,
            egress_aqm_drops: c.egress_aqm_drops,
            tail_drops: c.tail_drops,
            noroute_drops: c.noroute_drops,
            notifications_emitted: c.notifications_emitted,
            notifications_consumed: c.notifications_consumed,
            classic: ClassCounts {
                delivered: c.classic_delivered,
                ingress_aqm_drops: c.classic_ingress_drops,
                egress_aqm_drops: c.classic_egress_drops,
                tail_drops: c.classic_tail_drops,
                ce_marks: c.classic_ce_marks,
            },
            scalable: ClassCounts {
                delivered: c.scalable_delivered,
                ingress_aqm_drops: c.scalable_ingress_drops,
                egress_aqm_drops: c.scalable_egress_drops,
                tail_drops: c.scalable_tail_drops,
                ce_marks: c.scalable_ce_marks,
            },
            wasted_memory_bytes: self.ledger.wasted_memory_bytes,
            wasted_time_ns: self.ledger.wasted_time_ns,
            wasted_cycles: self.ledger.wasted_cycles,
            wasted_weight_tenths: self.ledger.wasted_weight_tenths,
            classic_mean_mbps: classic_bytes as f64 * 8.0 / dur / 1e6,
            scalable_mean_mbps: scalable_bytes as f64 * 8.0 / dur / 1e6,
            jain_per_phase,
            trace_hash: format!("{:016x}", stats.trace_hash),
            events_processed: stats.events_processed,
        };
        RunOutput {
            summary,
            series: self.recorder.buckets,
            stats,
            ledger: self.ledger,
            counters: self.switch.counters,
            in_flight_at_end,
        }
    }
}

/// Convenience wrapper: build and run in one call.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput, ConfigError> {
    Simulation::new(cfg)?.run()
}
