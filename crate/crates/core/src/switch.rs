//! The two-block pipeline model: Ingress block, non-programmable Traffic
//! Manager with per-port queues and shaping, Egress block, the internal
//! recirculation path and the optional ghost depth channel.
//!
//! Ingress/Egress processing itself takes zero simulated time; pipeline
//! latency is a resource (cycles/weight), not a delay contributor.

use std::collections::{HashMap, VecDeque};

use crate::aqm::{AqmAlgorithm, AqmIngressVerdict};
use crate::engine::Rng;
use crate::metrics::{DropLocus, WasteLedger};
use crate::model::{
    ConfigError, EcnCodepoint, Packet, PacketRole, PortConfig, PortId, QueueId, SimTime,
    TrafficClass,
};

/// Queue metadata captured by the Traffic Manager, available to the Egress
/// hook always and to the Ingress hook only through the ghost channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueueMetadata {
    pub queue_delay: SimTime,
    pub queue_depth_bytes: u64,
}

/// Per-(port, queue) drop flag set by a consumed notification and cleared
/// when exactly one Classic packet is dropped against it.
#[derive(Debug, Clone, Default)]
pub struct DropFlagTable {
    flags: HashMap<(PortId, QueueId), bool>,
}

impl DropFlagTable {
    pub fn set(&mut self, port: PortId, queue: QueueId) {
        self.flags.insert((port, queue), true);
    }

    pub fn clear(&mut self, port: PortId, queue: QueueId) {
        self.flags.insert((port, queue), false);
    }

    pub fn is_set(&self, port: PortId, queue: QueueId) -> bool {
        self.flags.get(&(port, queue)).copied().unwrap_or(false)
    }

    pub fn any_set(&self) -> bool {
        self.flags.values().any(|&v| v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    AqmIngress,
    NoRoute,
}

#[derive(Debug, Clone, PartialEq)]
pub enum IngressVerdict {
    ForwardToTm {
        pkt: Packet,
        port: PortId,
        queue: QueueId,
    },
    Drop(DropReason),
    ConsumeNotification,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnqueueResult {
    Accepted,
    TailDropped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EgressVerdict {
    Forward,
    ForwardMarked,
    DropAtDeparser,
    ForwardAndNotify,
}

/// What the egress block hands back to the event loop.
#[derive(Debug, Clone, PartialEq)]
pub enum EgressOutcome {
    Deliver(Packet),
    DeliverAndNotify(Packet, Packet),
    Dropped,
}

#[derive(Debug)]
struct TmQueue {
    fifo: VecDeque<Packet>,
    occupancy_bytes: u64,
    capacity_bytes: u64,
    is_l4s: bool,
    pub max_depth_bytes: u64,
    pub max_delay: SimTime,
}

#[derive(Debug)]
struct TmPort {
    bandwidth_bps: u64,
    queues: Vec<TmQueue>,
    /// Consecutive L4S dequeues while the classic queue was backlogged.
    l4s_run: u32,
    /// Shaper: the port is busy serializing until this instant.
    pub busy_until: SimTime,
    pub dequeue_scheduled: bool,
}

/// Per-run switch counters exported to metrics.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SwitchCounters {
    pub injected: u64,
    pub delivered: u64,
    pub ingress_aqm_drops: u64,
    pub egress_aqm_drops: u64,
    pub tail_drops: u64,
    pub noroute_drops: u64,
    pub notifications_emitted: u64,
    pub notifications_consumed: u64,
    pub ce_marks: u64,
    pub classic_delivered: u64,
    pub scalable_delivered: u64,
    pub classic_ingress_drops: u64,
    pub scalable_ingress_drops: u64,
    pub classic_egress_drops: u64,
    pub scalable_egress_drops: u64,
    pub classic_tail_drops: u64,
    pub scalable_tail_drops: u64,
    pub scalable_ce_marks: u64,
    pub classic_ce_marks: u64,
    /// Total pipeline usage across all packets (not only wasted).
    pub total_cycles: u64,
    pub total_weight_tenths: u64,
}

impl SwitchCounters {
    /// Packet conservation: everything injected is accounted for.
    pub fn conserved(&self, in_flight_at_end: u64) -> bool {
        self.injected
            == self.delivered
                + self.ingress_aqm_drops
                + self.egress_aqm_drops
                + self.tail_drops
                + self.noroute_drops
                + self.notifications_consumed
                + in_flight_at_end
    }
}

/// One switch: ingress classification, TM queues with shaping and
/// scheduling, egress AQM hooks and the recirculation path.
pub struct Switch {
    ports: HashMap<PortId, TmPort>,
    pub flags: DropFlagTable,
    pub counters: SwitchCounters,
    ghost_enabled: bool,
    starvation_guard: Option<u32>,
}

impl Switch {
    pub fn new(ports: &[PortConfig], ghost_enabled: bool, starvation_guard: Option<u32>) -> Switch {
        let mut map = HashMap::new();
        for pc in ports {
            map.insert(
                pc.port,
                TmPort {
                    bandwidth_bps: pc.bandwidth_bps,
                    queues: pc
                        .queues
                        .iter()
                        .map(|q| TmQueue {
                            fifo: VecDeque::new(),
                            occupancy_bytes: 0,
                            capacity_bytes: q.capacity_bytes,
                            is_l4s: q.is_l4s,
                            max_depth_bytes: 0,
                            max_delay: SimTime::ZERO,
                        })
                        .collect(),
                    l4s_run: 0,
                    busy_until: SimTime::ZERO,
                    dequeue_scheduled: false,
                },
            );
        }
        Switch {
            ports: map,
            flags: DropFlagTable::default(),
            counters: SwitchCounters::default(),
            ghost_enabled,
            starvation_guard,
        }
    }

    pub fn ghost_enabled(&self) -> bool {
        self.ghost_enabled
    }

    fn classify(&self, pkt: &Packet) -> Option<(PortId, QueueId)> {
        let port = self.ports.get(&pkt.output_port)?;
        // Scalable traffic goes to the L4S queue when the port has one.
        let qid = match pkt.class {
            TrafficClass::Scalable => port
                .queues
                .iter()
                .position(|q| q.is_l4s)
                .unwrap_or(0),
            TrafficClass::Classic => port
                .queues
                .iter()
                .position(|q| !q.is_l4s)
                .unwrap_or(0),
        };
        Some((pkt.output_port, QueueId(qid as u8)))
    }

    /// Current occupancy of a queue through the ghost channel. Errors when
    /// ghost mode is off: with ghost disabled no ingress-side code path can
    /// observe queue state.
    pub fn ghost_read_depth(&self, port: PortId, queue: QueueId) -> Result<u64, ConfigError> {
        if !self.ghost_enabled {
            return Err(ConfigError::GhostUnavailable);
        }
        Ok(self
            .ports
            .get(&port)
            .and_then(|p| p.queues.get(queue.0 as usize))
            .map(|q| q.occupancy_bytes)
            .unwrap_or(0))
    }

    /// Ingress block: classification, the AQM's ingress hook, resource
    /// charging. Notifications are consumed here and never reach the TM.
    pub fn ingress_process(
        &mut self,
        mut pkt: Packet,
        aqm: &mut dyn AqmAlgorithm,
        rng: &mut Rng,
        ledger: &mut WasteLedger,
    ) -> IngressVerdict {
        self.counters.injected += 1;
        let cost = crate::metrics::AqmCostConstants::for_kind(aqm.kind());
        self.counters.total_cycles += cost.ingress_cycles;
        self.counters.total_weight_tenths += cost.ingress_weight_tenths;

        if pkt.role == PacketRole::Notification {
            let verdict = aqm.ingress_hook(&pkt, &mut self.flags, None, rng);
            debug_assert_eq!(verdict, AqmIngressVerdict::ConsumeNotification);
            self.counters.notifications_consumed += 1;
            return IngressVerdict::ConsumeNotification;
        }

        let (port, queue) = match self.classify(&pkt) {
            Some(pq) => pq,
            None => {
                // never charged as an AQM drop
                self.counters.noroute_drops += 1;
                return IngressVerdict::Drop(DropReason::NoRoute);
            }
        };
        pkt.queue = queue;

        let ghost_depth = if self.ghost_enabled {
            Some(self.ghost_read_depth(port, queue).expect("ghost enabled"))
        } else {
            None
        };

        match aqm.ingress_hook(&pkt, &mut self.flags, ghost_depth, rng) {
            AqmIngressVerdict::Forward => IngressVerdict::ForwardToTm { pkt, port, queue },
            AqmIngressVerdict::MarkAndForward => {
                pkt.ecn = EcnCodepoint::Ce;
                self.counters.ce_marks += 1;
                self.counters.scalable_ce_marks += 1;
                IngressVerdict::ForwardToTm { pkt, port, queue }
            }
            AqmIngressVerdict::Drop => {
                self.counters.ingress_aqm_drops += 1;
                match pkt.class {
                    TrafficClass::Classic => self.counters.classic_ingress_drops += 1,
                    TrafficClass::Scalable => self.counters.scalable_ingress_drops += 1,
                }
                ledger.charge_drop(
                    aqm.kind(),
                    DropLocus::Ingress,
                    pkt.size_bytes as u64,
                    SimTime::ZERO,
                );
                IngressVerdict::Drop(DropReason::AqmIngress)
            }
            AqmIngressVerdict::ConsumeNotification => {
                // only notifications may be consumed; regular packets never are
                unreachable!("regular packet consumed at ingress")
            }
        }
    }

    /// Traffic Manager admission. Rejects with a tail drop when the queue is
    /// full; exact fit is admitted.
    pub fn tm_enqueue(
        &mut self,
        pkt: Packet,
        port: PortId,
        queue: QueueId,
        aqm_kind: crate::model::AqmKind,
        ledger: &mut WasteLedger,
    ) -> EnqueueResult {
        let q = self
            .ports
            .get_mut(&port)
            .and_then(|p| p.queues.get_mut(queue.0 as usize))
            .expect("enqueue on classified queue");
        if q.occupancy_bytes + pkt.size_bytes as u64 > q.capacity_bytes {
            self.counters.tail_drops += 1;
            match pkt.class {
                TrafficClass::Classic => self.counters.classic_tail_drops += 1,
                TrafficClass::Scalable => self.counters.scalable_tail_drops += 1,
            }
            ledger.charge_tail_drop(aqm_kind, pkt.size_bytes as u64);
            return EnqueueResult::TailDropped;
        }
        q.occupancy_bytes += pkt.size_bytes as u64;
        q.max_depth_bytes = q.max_depth_bytes.max(q.occupancy_bytes);
        q.fifo.push_back(pkt);
        EnqueueResult::Accepted
    }

    /// Serialization gap of `bytes` on this port's shaped rate.
    pub fn serialization_delay(&self, port: PortId, bytes: u32) -> SimTime {
        let bw = self.ports[&port].bandwidth_bps;
        SimTime::from_nanos((bytes as u128 * 8 * 1_000_000_000 / bw as u128) as u64)
    }

    /// Pick the queue to serve: strict priority for the L4S queue with a
    /// starvation guard granting the classic queue service once per N
    /// consecutive L4S dequeues while backlogged.
    fn pick_queue(&mut self, port: PortId) -> Option<usize> {
        let guard = self.starvation_guard;
        let p = self.ports.get_mut(&port)?;
        let l4s = p.queues.iter().position(|q| q.is_l4s && !q.fifo.is_empty());
        let classic = p.queues.iter().position(|q| !q.is_l4s && !q.fifo.is_empty());
        match (l4s, classic) {
            (Some(l), Some(c)) => {
                if let Some(n) = guard {
                    if p.l4s_run >= n {
                        p.l4s_run = 0;
                        return Some(c);
                    }
                }
                p.l4s_run += 1;
                Some(l)
            }
            (Some(l), None) => {
                p.l4s_run = 0;
                Some(l)
            }
            (None, Some(c)) => {
                p.l4s_run = 0;
                Some(c)
            }
            (None, None) => None,
        }
    }

    /// Serve the scheduled queue of a port. Stamps the egress timestamp and
    /// returns the packet; the caller owns shaper bookkeeping via
    /// [`Switch::serialization_delay`].
    pub fn tm_dequeue(&mut self, port: PortId, now: SimTime) -> Option<Packet> {
        let qidx = self.pick_queue(port)?;
        let q = &mut self.ports.get_mut(&port)?.queues[qidx];
        let mut pkt = q.fifo.pop_front()?;
        q.occupancy_bytes -= pkt.size_bytes as u64;
        pkt.egress_tstamp = Some(now);
        let delay = now - pkt.ingress_tstamp;
        if delay > q.max_delay {
            q.max_delay = delay;
        }
        Some(pkt)
    }

    /// Egress block: the AQM's egress hook plus verdict bookkeeping.
    pub fn egress_process(
        &mut self,
        mut pkt: Packet,
        aqm: &mut dyn AqmAlgorithm,
        rng: &mut Rng,
        ledger: &mut WasteLedger,
        now: SimTime,
    ) -> EgressOutcome {
        let meta = QueueMetadata {
            queue_delay: now - pkt.ingress_tstamp,
            queue_depth_bytes: self.queue_depth(pkt.output_port, pkt.queue),
        };
        let cost = crate::metrics::AqmCostConstants::for_kind(aqm.kind());
        self.counters.total_cycles += cost.egress_cycles;
        self.counters.total_weight_tenths += cost.egress_weight_tenths;

        match aqm.egress_hook(&pkt, &meta, rng) {
            EgressVerdict::Forward => {
                self.count_delivery(&pkt);
                EgressOutcome::Deliver(pkt)
            }
            EgressVerdict::ForwardMarked => {
                pkt.ecn = EcnCodepoint::Ce;
                self.counters.ce_marks += 1;
                match pkt.class {
                    TrafficClass::Classic => self.counters.classic_ce_marks += 1,
                    TrafficClass::Scalable => self.counters.scalable_ce_marks += 1,
                }
                self.count_delivery(&pkt);
                EgressOutcome::Deliver(pkt)
            }
            EgressVerdict::DropAtDeparser => {
                self.counters.egress_aqm_drops += 1;
                match pkt.class {
                    TrafficClass::Classic => self.counters.classic_egress_drops += 1,
                    TrafficClass::Scalable => self.counters.scalable_egress_drops += 1,
                }
                ledger.charge_drop(
                    aqm.kind(),
                    DropLocus::Egress,
                    pkt.size_bytes as u64,
                    meta.queue_delay,
                );
                EgressOutcome::Dropped
            }
            EgressVerdict::ForwardAndNotify => {
                // the original is delivered unaltered; the 48-byte clone
                // carries the decision back to the ingress block
                self.counters.notifications_emitted += 1;
                let notif = Packet::notification_for(&pkt, now);
                self.count_delivery(&pkt);
                EgressOutcome::DeliverAndNotify(pkt, notif)
            }
        }
    }

    fn count_delivery(&mut self, pkt: &Packet) {
        self.counters.delivered += 1;
        match pkt.class {
            TrafficClass::Classic => self.counters.classic_delivered += 1,
            TrafficClass::Scalable => self.counters.scalable_delivered += 1,
        }
    }

    pub fn queue_depth(&self, port: PortId, queue: QueueId) -> u64 {
        self.ports
            .get(&port)
            .and_then(|p| p.queues.get(queue.0 as usize))
            .map(|q| q.occupancy_bytes)
            .unwrap_or(0)
    }

    pub fn queue_len_packets(&self, port: PortId, queue: QueueId) -> usize {
        self.ports
            .get(&port)
            .and_then(|p| p.queues.get(queue.0 as usize))
            .map(|q| q.fifo.len())
            .unwrap_or(0)
    }

    /// Packets still held by the Traffic Manager.
    pub fn in_flight_packets(&self) -> u64 {
        self.ports
            .values()
            .flat_map(|p| p.queues.iter())
            .map(|q| q.fifo.len() as u64)
            .sum()
    }

    pub fn max_depth_bytes(&self, port: PortId, queue: QueueId) -> u64 {
        self.ports
            .get(&port)
            .and_then(|p| p.queues.get(queue.0 as usize))
            .map(|q| q.max_depth_bytes)
            .unwrap_or(0)
    }

    pub fn max_delay(&self, port: PortId, queue: QueueId) -> SimTime {
        self.ports
            .get(&port)
            .and_then(|p| p.queues.get(queue.0 as usize))
            .map(|q| q.max_delay)
            .unwrap_or(SimTime::ZERO)
    }

    pub fn port_busy_until(&self, port: PortId) -> SimTime {
        self.ports[&port].busy_until
    }

    pub fn set_port_busy_until(&mut self, port: PortId, t: SimTime) {
        self.ports.get_mut(&port).unwrap().busy_until = t;
    }

    pub fn dequeue_scheduled(&self, port: PortId) -> bool {
        self.ports[&port].dequeue_scheduled
    }

    pub fn set_dequeue_scheduled(&mut self, port: PortId, v: bool) {
        self.ports.get_mut(&port).unwrap().dequeue_scheduled = v;
    }

    pub fn port_ids(&self) -> Vec<PortId> {
        let mut ids: Vec<PortId> = self.ports.keys().copied().collect();
        ids.sort();
        ids
    }

    pub fn has_backlog(&self, port: PortId) -> bool {
        self.ports
            .get(&port)
            .map(|p| p.queues.iter().any(|q| !q.fifo.is_empty()))
            .unwrap_or(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aqm;
    use crate::model::{AqmConfig, AqmKind, FlowId, QueueConfig};

    fn test_port(capacity: u64) -> PortConfig {
        PortConfig {
            port: PortId(0),
            bandwidth_bps: 120_000_000,
            queues: vec![
                QueueConfig {
                    queue: QueueId(0),
                    capacity_bytes: capacity,
                    is_l4s: false,
                    scheduler_weight: 1,
                },
                QueueConfig {
                    queue: QueueId(1),
                    capacity_bytes: capacity,
                    is_l4s: true,
                    scheduler_weight: 1,
                },
            ],
        }
    }

    fn ired() -> Box<dyn AqmAlgorithm> {
        aqm::create(&AqmConfig::defaults(AqmKind::IredDelay), 120_000_000).unwrap()
    }

    fn classic_pkt(id: u64, now: SimTime) -> Packet {
        Packet::data(id, FlowId(1), TrafficClass::Classic, 1500, now)
    }

    fn scalable_pkt(id: u64, now: SimTime) -> Packet {
        Packet::data(id, FlowId(2), TrafficClass::Scalable, 1500, now)
    }

    #[test]
    fn enqueue_dequeue_fifo_and_occupancy() {
        let mut sw = Switch::new(&[test_port(1_000_000)], false, Some(16));
        let mut aqm = ired();
        let mut rng = Rng::new(1);
        let mut ledger = WasteLedger::new();
        let now = SimTime::ZERO;
        for id in 0..2 {
            match sw.ingress_process(classic_pkt(id, now), aqm.as_mut(), &mut rng, &mut ledger) {
                IngressVerdict::ForwardToTm { pkt, port, queue } => {
                    assert_eq!(
                        sw.tm_enqueue(pkt, port, queue, AqmKind::IredDelay, &mut ledger),
                        EnqueueResult::Accepted
                    );
                }
                other => panic!("unexpected {other:?}"),
            }
        }
        assert_eq!(sw.queue_depth(PortId(0), QueueId(0)), 3000);
        let a = sw.tm_dequeue(PortId(0), SimTime::from_millis(1)).unwrap();
        let b = sw.tm_dequeue(PortId(0), SimTime::from_millis(1)).unwrap();
        assert_eq!((a.id, b.id), (0, 1));
        assert_eq!(a.egress_tstamp, Some(SimTime::from_millis(1)));
        assert_eq!(sw.queue_depth(PortId(0), QueueId(0)), 0);
    }

    #[test]
    fn tail_drop_at_capacity_boundary() {
        // capacity fits exactly two packets
        let mut sw = Switch::new(&[test_port(3000)], false, Some(16));
        let mut ledger = WasteLedger::new();
        let now = SimTime::ZERO;
        for id in 0..2 {
            assert_eq!(
                sw.tm_enqueue(
                    classic_pkt(id, now),
                    PortId(0),
                    QueueId(0),
                    AqmKind::TailDrop,
                    &mut ledger
                ),
                EnqueueResult::Accepted
            );
        }
        assert_eq!(
            sw.tm_enqueue(
                classic_pkt(2, now),
                PortId(0),
                QueueId(0),
                AqmKind::TailDrop,
                &mut ledger
            ),
            EnqueueResult::TailDropped
        );
        assert_eq!(sw.counters.tail_drops, 1);
    }

    #[test]
    fn serialization_gap_1500b_at_120mbps() {
        let sw = Switch::new(&[test_port(1_000_000)], false, Some(16));
        assert_eq!(
            sw.serialization_delay(PortId(0), 1500),
            SimTime::from_micros(100)
        );
    }

    #[test]
    fn strict_priority_serves_l4s_first() {
        let mut sw = Switch::new(&[test_port(1_000_000)], false, Some(16));
        let mut ledger = WasteLedger::new();
        let now = SimTime::ZERO;
        sw.tm_enqueue(classic_pkt(0, now), PortId(0), QueueId(0), AqmKind::IredDelay, &mut ledger);
        sw.tm_enqueue(scalable_pkt(1, now), PortId(0), QueueId(1), AqmKind::IredDelay, &mut ledger);
        let first = sw.tm_dequeue(PortId(0), now).unwrap();
        assert_eq!(first.class, TrafficClass::Scalable);
    }

    #[test]
    fn starvation_guard_grants_classic_service() {
        let mut sw = Switch::new(&[test_port(10_000_000)], false, Some(4));
        let mut ledger = WasteLedger::new();
        let now = SimTime::ZERO;
        sw.tm_enqueue(classic_pkt(0, now), PortId(0), QueueId(0), AqmKind::IredDelay, &mut ledger);
        for id in 0..10 {
            sw.tm_enqueue(scalable_pkt(id, now), PortId(0), QueueId(1), AqmKind::IredDelay, &mut ledger);
        }
        let classes: Vec<TrafficClass> = (0..6)
            .map(|_| sw.tm_dequeue(PortId(0), now).unwrap().class)
            .collect();
        // four L4S dequeues, then the guard forces one classic service
        assert_eq!(
            classes,
            [
                TrafficClass::Scalable,
                TrafficClass::Scalable,
                TrafficClass::Scalable,
                TrafficClass::Scalable,
                TrafficClass::Classic,
                TrafficClass::Scalable,
            ]
        );
    }

    #[test]
    fn notification_sets_flag_and_is_consumed() {
        let mut sw = Switch::new(&[test_port(1_000_000)], false, Some(16));
        let mut aqm = ired();
        let mut rng = Rng::new(1);
        let mut ledger = WasteLedger::new();
        let now = SimTime::ZERO;
        let data = classic_pkt(0, now);
        let notif = Packet::notification_for(&data, now);
        let verdict = sw.ingress_process(notif, aqm.as_mut(), &mut rng, &mut ledger);
        assert_eq!(verdict, IngressVerdict::ConsumeNotification);
        assert!(sw.flags.is_set(PortId(0), QueueId(0)));
        assert_eq!(sw.counters.notifications_consumed, 1);

        // next classic packet to the flagged queue is dropped, flag resets
        let v = sw.ingress_process(classic_pkt(1, now), aqm.as_mut(), &mut rng, &mut ledger);
        assert_eq!(v, IngressVerdict::Drop(DropReason::AqmIngress));
        assert!(!sw.flags.is_set(PortId(0), QueueId(0)));
        assert_eq!(ledger.wasted_memory_bytes, 1548);
    }

    #[test]
    fn scalable_never_ingress_dropped() {
        let mut sw = Switch::new(&[test_port(1_000_000)], false, Some(16));
        let mut aqm = ired();
        let mut rng = Rng::new(1);
        let mut ledger = WasteLedger::new();
        let now = SimTime::ZERO;
        // flag the L4S queue directly; even then scalable forwards
        sw.flags.set(PortId(0), QueueId(1));
        let v = sw.ingress_process(scalable_pkt(0, now), aqm.as_mut(), &mut rng, &mut ledger);
        assert!(matches!(v, IngressVerdict::ForwardToTm { .. }));
    }

    #[test]
    fn unknown_destination_counts_noroute() {
        let mut sw = Switch::new(&[test_port(1_000_000)], false, Some(16));
        let mut aqm = ired();
        let mut rng = Rng::new(1);
        let mut ledger = WasteLedger::new();
        let mut pkt = classic_pkt(0, SimTime::ZERO);
        pkt.output_port = PortId(9);
        let v = sw.ingress_process(pkt, aqm.as_mut(), &mut rng, &mut ledger);
        assert_eq!(v, IngressVerdict::Drop(DropReason::NoRoute));
        assert_eq!(sw.counters.noroute_drops, 1);
        assert_eq!(ledger.ingress_drops, 0);
    }

    #[test]
    fn ghost_depth_contract() {
        let mut sw = Switch::new(&[test_port(1_000_000)], true, Some(16));
        assert_eq!(sw.ghost_read_depth(PortId(0), QueueId(0)).unwrap(), 0);
        let mut ledger = WasteLedger::new();
        let mut pkt = classic_pkt(0, SimTime::ZERO);
        pkt.size_bytes = 800;
        sw.tm_enqueue(pkt, PortId(0), QueueId(0), AqmKind::IredGhost, &mut ledger);
        assert_eq!(sw.ghost_read_depth(PortId(0), QueueId(0)).unwrap(), 800);

        let off = Switch::new(&[test_port(1_000_000)], false, Some(16));
        assert!(matches!(
            off.ghost_read_depth(PortId(0), QueueId(0)),
            Err(ConfigError::GhostUnavailable)
        ));
    }
}
