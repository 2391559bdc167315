//! Disaggregated AQM: the drop decision runs in the egress block over an
//! EWMA of queue delay (or depth), the drop action runs in the ingress
//! block, and a 48-byte recirculated notification couples the two. The
//! ghost variant moves the whole decision to ingress over the ghost depth
//! channel and needs no notifications.

use crate::engine::Rng;
use crate::model::{AqmConfig, AqmKind, Packet, PacketRole, TrafficClass};
use crate::switch::{DropFlagTable, EgressVerdict, QueueMetadata};

use super::{AqmAlgorithm, AqmIngressVerdict};

pub const DROP_PROB_MAX: u32 = 65_535;

/// Outcome of one decision over the current EWMA.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IredDecision {
    Forward,
    /// Scalable packet selected: set CE.
    Mark,
    /// Classic packet selected: notify (egress) or drop (ghost ingress).
    DropOrNotify,
}

/// The decision registers: EWMA, min/max thresholds and the probability
/// register, all in the same unit (delay ns or depth bytes).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IredState {
    pub ewma: u64,
    pub drop_prob: u32,
    pub min_thsld: u64,
    pub max_thsld: u64,
}

impl IredState {
    pub fn new(min_thsld: u64) -> IredState {
        IredState {
            ewma: 0,
            drop_prob: 0,
            min_thsld,
            max_thsld: 2 * min_thsld,
        }
    }

    /// EWMA with alpha = 1/2 as a bit shift: (sample + prev) >> 1,
    /// truncating.
    pub fn ewma_update(&mut self, sample: u64) -> u64 {
        self.ewma = (sample + self.ewma) >> 1;
        self.ewma
    }

    /// One decision at the current EWMA. The threshold band is inclusive at
    /// both ends; inside it the register walks by one per packet, saturating
    /// at [0, 65535], and the scalable draw is the classic draw halved so
    /// scalable marking runs at exactly twice the classic rate.
    pub fn decide(&mut self, class: TrafficClass, rng: &mut Rng) -> IredDecision {
        self.decide_at(self.ewma, class, rng)
    }

    /// Same decision against an explicit congestion signal (used for the
    /// scalable max-coupling, where the signal is the larger of the classic
    /// and the L4S filter).
    pub fn decide_at(&mut self, signal: u64, class: TrafficClass, rng: &mut Rng) -> IredDecision {
        if signal < self.min_thsld {
            return IredDecision::Forward;
        }
        if signal > self.max_thsld {
            return match class {
                TrafficClass::Scalable => IredDecision::Mark,
                TrafficClass::Classic => IredDecision::DropOrNotify,
            };
        }
        let rand_classic = rng.next_rand16() as u32;
        match class {
            TrafficClass::Scalable => {
                let rand_l4s = rand_classic / 2;
                if rand_l4s < self.drop_prob {
                    self.drop_prob = self.drop_prob.saturating_sub(1);
                    IredDecision::Mark
                } else {
                    self.drop_prob = (self.drop_prob + 1).min(DROP_PROB_MAX);
                    IredDecision::Forward
                }
            }
            TrafficClass::Classic => {
                if rand_classic < self.drop_prob {
                    self.drop_prob = self.drop_prob.saturating_sub(1);
                    IredDecision::DropOrNotify
                } else {
                    self.drop_prob = (self.drop_prob + 1).min(DROP_PROB_MAX);
                    IredDecision::Forward
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    DelayBased,
    DepthBased,
    GhostDepth,
}

pub struct Ired {
    kind: AqmKind,
    mode: Mode,
    pub state: IredState,
    /// Congestion filter for the low-latency queue itself. A scalable
    /// decision uses the larger of this and the classic filter, so scalable
    /// traffic is marked both when it congests its own queue and (at twice
    /// the classic rate) when the classic queue is congested.
    pub l4s_ewma: u64,
}

impl Ired {
    pub fn new(cfg: &AqmConfig, bandwidth_bps: u64) -> Ired {
        let mode = match cfg.kind {
            AqmKind::IredDelay => Mode::DelayBased,
            AqmKind::IredDepth => Mode::DepthBased,
            AqmKind::IredGhost => Mode::GhostDepth,
            other => panic!("not an ired kind: {other:?}"),
        };
        let min = match mode {
            Mode::DelayBased => cfg.min_threshold_ns(),
            Mode::DepthBased | Mode::GhostDepth => cfg.min_threshold_bytes(bandwidth_bps),
        };
        Ired {
            kind: cfg.kind,
            mode,
            state: IredState::new(min),
            l4s_ewma: 0,
        }
    }
}

impl AqmAlgorithm for Ired {
    fn kind(&self) -> AqmKind {
        self.kind
    }

    fn egress_hook(&mut self, pkt: &Packet, meta: &QueueMetadata, rng: &mut Rng) -> EgressVerdict {
        match self.mode {
            // ghost: everything already happened at ingress
            Mode::GhostDepth => EgressVerdict::Forward,
            Mode::DelayBased | Mode::DepthBased => {
                let sample = match self.mode {
                    Mode::DelayBased => meta.queue_delay.as_nanos(),
                    _ => meta.queue_depth_bytes,
                };
                // each class samples its own queue; the classic filter is
                // the shared base signal, the scalable one only adds to it
                let signal = match pkt.class {
                    TrafficClass::Classic => self.state.ewma_update(sample),
                    TrafficClass::Scalable => {
                        self.l4s_ewma = (sample + self.l4s_ewma) >> 1;
                        self.l4s_ewma.max(self.state.ewma)
                    }
                };
                match self.state.decide_at(signal, pkt.class, rng) {
                    IredDecision::Forward => EgressVerdict::Forward,
                    IredDecision::Mark => EgressVerdict::ForwardMarked,
                    IredDecision::DropOrNotify => EgressVerdict::ForwardAndNotify,
                }
            }
        }
    }

    fn ingress_hook(
        &mut self,
        pkt: &Packet,
        flags: &mut DropFlagTable,
        ghost_depth: Option<u64>,
        rng: &mut Rng,
    ) -> AqmIngressVerdict {
        if pkt.role == PacketRole::Notification {
            flags.set(pkt.output_port, pkt.queue);
            return AqmIngressVerdict::ConsumeNotification;
        }
        match self.mode {
            Mode::GhostDepth => {
                let depth = ghost_depth.expect("ghost channel required for ghost variant");
                // same per-queue coupling as the egress decision
                let signal = match pkt.class {
                    TrafficClass::Classic => self.state.ewma_update(depth),
                    TrafficClass::Scalable => {
                        self.l4s_ewma = (depth + self.l4s_ewma) >> 1;
                        self.l4s_ewma.max(self.state.ewma)
                    }
                };
                match self.state.decide_at(signal, pkt.class, rng) {
                    IredDecision::Forward => AqmIngressVerdict::Forward,
                    IredDecision::Mark => AqmIngressVerdict::MarkAndForward,
                    IredDecision::DropOrNotify => AqmIngressVerdict::Drop,
                }
            }
            Mode::DelayBased | Mode::DepthBased => {
                if pkt.class == TrafficClass::Classic && flags.is_set(pkt.output_port, pkt.queue) {
                    // one drop per notification
                    flags.clear(pkt.output_port, pkt.queue);
                    AqmIngressVerdict::Drop
                } else {
                    AqmIngressVerdict::Forward
                }
            }
        }
    }
}
