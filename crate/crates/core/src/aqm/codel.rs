//! Sojourn-time AQM with the standard two-state control law and an
//! inverse-square-root implemented two ways: exact, and a piecewise-constant
//! table keyed by the leading bits of the drop count, the way a longest
//! prefix match stage would hold it. Drops apply to every class: this
//! algorithm has no dual-queue mode, so scalable packets are dropped, not
//! marked.

use crate::engine::Rng;
use crate::model::{AqmConfig, AqmKind, Packet, PacketRole, SimTime, SqrtMode};
use crate::switch::{DropFlagTable, EgressVerdict, QueueMetadata};

use super::{AqmAlgorithm, AqmIngressVerdict};

/// Q32 fixed point: 1.0 == 2^32.
pub const Q32_ONE: u64 = 1 << 32;

/// 1/sqrt(count) in Q32.
///
/// `LpmApprox` keeps the top five significant bits of `count` and returns
/// the exact value at the midpoint of that bucket, so every bucket is at
/// most a 17/16 span and the relative error stays within 2%; counts below
/// 32 get their own bucket and are exact at the integer.
pub fn inv_sqrt_q32(count: u64, mode: SqrtMode) -> u64 {
    debug_assert!(count >= 1);
    let x = match mode {
        SqrtMode::Exact => count as f64,
        SqrtMode::LpmApprox => {
            let bits = 64 - count.leading_zeros() as u64; // position of msb + 1
            if bits <= 5 {
                count as f64
            } else {
                let shift = bits - 5;
                let lo = (count >> shift) << shift;
                let hi = lo + (1 << shift) - 1;
                (lo + hi) as f64 / 2.0
            }
        }
    };
    (Q32_ONE as f64 / x.sqrt()).round() as u64
}

/// Controller registers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodelState {
    pub target: SimTime,
    pub interval: SimTime,
    pub dropping: bool,
    pub count: u64,
    pub drop_next: SimTime,
    pub first_above_time: Option<SimTime>,
    pub sqrt_mode: SqrtMode,
}

impl CodelState {
    pub fn new(target: SimTime, interval: SimTime, sqrt_mode: SqrtMode) -> CodelState {
        CodelState {
            target,
            interval,
            dropping: false,
            count: 0,
            drop_next: SimTime::ZERO,
            first_above_time: None,
            sqrt_mode,
        }
    }

    /// interval / sqrt(count), the gap to the next drop.
    pub fn control_gap(&self, count: u64) -> SimTime {
        let q = inv_sqrt_q32(count, self.sqrt_mode);
        SimTime::from_nanos(((self.interval.as_nanos() as u128 * q as u128) >> 32) as u64)
    }

    /// One packet through the control law. `true` means drop.
    pub fn decide(&mut self, sojourn: SimTime, now: SimTime) -> bool {
        if sojourn < self.target {
            self.first_above_time = None;
            self.dropping = false;
            return false;
        }
        if self.dropping {
            if now >= self.drop_next {
                self.count += 1;
                self.drop_next = self.drop_next + self.control_gap(self.count);
                return true;
            }
            return false;
        }
        match self.first_above_time {
            None => {
                self.first_above_time = Some(now + self.interval);
                false
            }
            Some(t) if now >= t => {
                // sojourn stayed above target a full interval: start dropping
                self.dropping = true;
                self.count = 1;
                self.drop_next = now + self.control_gap(self.count);
                true
            }
            Some(_) => false,
        }
    }
}

pub struct Codel {
    pub state: CodelState,
}

impl Codel {
    pub fn new(cfg: &AqmConfig) -> Codel {
        Codel {
            state: CodelState::new(cfg.target_delay, cfg.interval, cfg.sqrt_mode),
        }
    }
}

impl AqmAlgorithm for Codel {
    fn kind(&self) -> AqmKind {
        AqmKind::Codel
    }

    fn egress_hook(&mut self, pkt: &Packet, meta: &QueueMetadata, _rng: &mut Rng) -> EgressVerdict {
        let now = pkt
            .egress_tstamp
            .unwrap_or(pkt.ingress_tstamp + meta.queue_delay);
        if self.state.decide(meta.queue_delay, now) {
            EgressVerdict::DropAtDeparser
        } else {
            EgressVerdict::Forward
        }
    }

    fn ingress_hook(
        &mut self,
        pkt: &Packet,
        _flags: &mut DropFlagTable,
        _ghost_depth: Option<u64>,
        _rng: &mut Rng,
    ) -> AqmIngressVerdict {
        if pkt.role == PacketRole::Notification {
            AqmIngressVerdict::ConsumeNotification
        } else {
            AqmIngressVerdict::Forward
        }
    }
}
