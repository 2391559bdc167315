//! Proportional-integral controller with a squared drop probability for the
//! classic queue and a doubled (coupled) mark probability for the scalable
//! queue. The probability is updated on a 15 ms control-plane timer; the
//! delay sample it consumes is the one captured at the previous tick, which
//! models the control-plane round trip as one interval of staleness.

use crate::engine::Rng;
use crate::model::{AqmConfig, AqmKind, Packet, PacketRole, SimTime, TrafficClass};
use crate::switch::{DropFlagTable, EgressVerdict, QueueMetadata};

use super::{AqmAlgorithm, AqmIngressVerdict};

#[derive(Debug, Clone, PartialEq)]
pub struct Pi2State {
    /// Base probability in [0, 1].
    pub p: f64,
    pub target: SimTime,
    pub interval: SimTime,
    /// Probability per second of target error.
    pub alpha: f64,
    /// Probability per second of delay trend.
    pub beta: f64,
    pub coupling_k: u32,
    pub tau_prev: SimTime,
    /// Classic-queue delay captured at the last tick, consumed at the next.
    pub staged_sample: SimTime,
    /// rand16 thresholds derived from p, refreshed at each tick so the
    /// per-packet path stays integer-only.
    drop_thresh: u32,
    mark_thresh: u32,
}

impl Pi2State {
    pub fn new(cfg: &AqmConfig) -> Pi2State {
        Pi2State {
            p: 0.0,
            target: cfg.target_delay,
            interval: cfg.interval,
            alpha: cfg.alpha,
            beta: cfg.beta,
            coupling_k: cfg.coupling,
            tau_prev: SimTime::ZERO,
            staged_sample: SimTime::ZERO,
            drop_thresh: 0,
            mark_thresh: 0,
        }
    }

    /// One controller tick. `current_sample` becomes next tick's input.
    pub fn timer_update(&mut self, current_sample: SimTime) {
        let tau_now = self.staged_sample.as_secs_f64();
        let err = tau_now - self.target.as_secs_f64();
        let trend = tau_now - self.tau_prev.as_secs_f64();
        self.p = (self.p + self.alpha * err + self.beta * trend).clamp(0.0, 1.0);
        self.tau_prev = self.staged_sample;
        self.staged_sample = current_sample;
        self.refresh_thresholds();
    }

    fn refresh_thresholds(&mut self) {
        self.drop_thresh = ((self.p * self.p) * 65_536.0).round() as u32;
        let mark = (self.coupling_k as f64 * self.p).min(1.0);
        self.mark_thresh = (mark * 65_536.0).round() as u32;
    }

    /// Test access: pin p directly.
    pub fn set_p(&mut self, p: f64) {
        self.p = p.clamp(0.0, 1.0);
        self.refresh_thresholds();
    }

    pub fn drop_probability(&self) -> f64 {
        self.p * self.p
    }

    pub fn mark_probability(&self) -> f64 {
        (self.coupling_k as f64 * self.p).min(1.0)
    }

    pub fn decide(&mut self, class: TrafficClass, rng: &mut Rng) -> EgressVerdict {
        let r = rng.next_rand16() as u32;
        match class {
            TrafficClass::Classic => {
                if r < self.drop_thresh {
                    EgressVerdict::DropAtDeparser
                } else {
                    EgressVerdict::Forward
                }
            }
            TrafficClass::Scalable => {
                if r < self.mark_thresh {
                    EgressVerdict::ForwardMarked
                } else {
                    EgressVerdict::Forward
                }
            }
        }
    }
}

pub struct Pi2 {
    kind: AqmKind,
    pub state: Pi2State,
}

impl Pi2 {
    pub fn new(cfg: &AqmConfig) -> Pi2 {
        Pi2 {
            kind: cfg.kind,
            state: Pi2State::new(cfg),
        }
    }
}

impl AqmAlgorithm for Pi2 {
    fn kind(&self) -> AqmKind {
        self.kind
    }

    fn egress_hook(&mut self, pkt: &Packet, _meta: &QueueMetadata, rng: &mut Rng) -> EgressVerdict {
        self.state.decide(pkt.class, rng)
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

    fn timer_hook(&mut self, _now: SimTime, classic_delay: SimTime) {
        self.state.timer_update(classic_delay);
    }

    fn timer_interval(&self) -> Option<SimTime> {
        Some(self.state.interval)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AqmKind;

    fn cfg() -> AqmConfig {
        AqmConfig::defaults(AqmKind::Pi2)
    }

    #[test]
    fn worked_update_example() {
        let mut s = Pi2State::new(&cfg());
        s.staged_sample = SimTime::from_millis(25);
        s.tau_prev = SimTime::from_millis(22);
        s.timer_update(SimTime::from_millis(25));
        assert!((s.p - 0.0109375).abs() < 1e-12);
    }

    #[test]
    fn zero_error_zero_trend_holds_p() {
        let mut s = Pi2State::new(&cfg());
        s.p = 0.25;
        s.staged_sample = SimTime::from_millis(20);
        s.tau_prev = SimTime::from_millis(20);
        s.timer_update(SimTime::from_millis(20));
        assert!((s.p - 0.25).abs() < 1e-12);
    }

    #[test]
    fn sustained_idle_drives_p_to_floor() {
        let mut s = Pi2State::new(&cfg());
        s.p = 0.4;
        for _ in 0..2000 {
            s.timer_update(SimTime::ZERO);
        }
        assert_eq!(s.p, 0.0);
        // and it stays there
        s.timer_update(SimTime::ZERO);
        assert_eq!(s.p, 0.0);
    }

    #[test]
    fn staleness_is_one_interval() {
        let mut s = Pi2State::new(&cfg());
        // a 30 ms spike handed in now is only consumed at the next tick
        s.timer_update(SimTime::from_millis(30));
        assert_eq!(s.p, 0.0);
        s.timer_update(SimTime::from_millis(30));
        assert!(s.p > 0.0);
    }

    #[test]
    fn extreme_p_values() {
        let mut s = Pi2State::new(&cfg());
        let mut rng = Rng::new(5);
        s.set_p(0.0);
        for _ in 0..100 {
            assert_eq!(s.decide(TrafficClass::Classic, &mut rng), EgressVerdict::Forward);
            assert_eq!(s.decide(TrafficClass::Scalable, &mut rng), EgressVerdict::Forward);
        }
        s.set_p(1.0);
        for _ in 0..100 {
            assert_eq!(
                s.decide(TrafficClass::Classic, &mut rng),
                EgressVerdict::DropAtDeparser
            );
            assert_eq!(
                s.decide(TrafficClass::Scalable, &mut rng),
                EgressVerdict::ForwardMarked
            );
        }
    }

    #[test]
    fn squared_and_doubled_frequencies() {
        let mut s = Pi2State::new(&cfg());
        s.set_p(0.1);
        assert!((s.drop_probability() - 0.01).abs() < 1e-12);
        assert!((s.mark_probability() - 0.2).abs() < 1e-12);
        let mut rng = Rng::new(11);
        let n = 100_000u64;
        let mut drops = 0u64;
        let mut marks = 0u64;
        for _ in 0..n {
            if s.decide(TrafficClass::Classic, &mut rng) == EgressVerdict::DropAtDeparser {
                drops += 1;
            }
            if s.decide(TrafficClass::Scalable, &mut rng) == EgressVerdict::ForwardMarked {
                marks += 1;
            }
        }
        let tol = |p: f64| 3.0 * (n as f64 * p * (1.0 - p)).sqrt();
        assert!((drops as f64 - n as f64 * 0.01).abs() < tol(0.01));
        assert!((marks as f64 - n as f64 * 0.2).abs() < tol(0.2));
    }

    #[test]
    fn drop_never_exceeds_mark_below_half() {
        for p in [0.0, 0.05, 0.2, 0.5] {
            let mut s = Pi2State::new(&cfg());
            s.set_p(p);
            assert!(s.drop_probability() <= s.mark_probability());
        }
    }
}
