//! Window-based endpoint models: a classic sender (AIMD, optionally cubic
//! reduction) and a scalable sender that shrinks its window in proportion to
//! the recently observed mark fraction. Reliability is deliberately simple —
//! go-back-to-gap with a dup-ACK threshold of three and a coarse timeout —
//! because queue management, not loss recovery, is under study.

use serde::{Deserialize, Serialize};

use crate::engine::Rng;
use crate::metrics::MetricsError;
use crate::model::{FlowId, SimTime, TrafficClass};

/// EWMA gain for the scalable sender's mark fraction.
pub const MARK_EWMA_GAIN: f64 = 1.0 / 16.0;
pub const DUP_ACK_THRESHOLD: u32 = 3;
/// Multiplicative reduction on loss in cubic mode.
pub const CUBIC_BETA: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GrowthMode {
    Reno,
    Cubic,
}

/// Per-flow congestion-control state.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub flow: FlowId,
    pub class: TrafficClass,
    pub growth: GrowthMode,
    /// Congestion window in (fractional) packets, never below 1.
    pub cwnd: f64,
    pub ssthresh: f64,
    /// Scalable only: EWMA of the per-round mark fraction.
    pub marked_frac_ewma: f64,
    pub rtt_base: SimTime,
    pub mss: u32,
    pub in_flight: u32,
    // round bookkeeping for the scalable per-RTT reduction
    round_acks: u32,
    round_marks: u32,
    round_size: u32,
}

impl FlowState {
    pub fn new(
        flow: FlowId,
        class: TrafficClass,
        growth: GrowthMode,
        rtt_base: SimTime,
        mss: u32,
    ) -> FlowState {
        FlowState {
            flow,
            class,
            growth,
            cwnd: 1.0,
            ssthresh: f64::INFINITY,
            marked_frac_ewma: 0.0,
            rtt_base,
            mss,
            in_flight: 0,
            round_acks: 0,
            round_marks: 0,
            round_size: 1,
        }
    }

    pub fn window_packets(&self) -> u32 {
        self.cwnd.floor().max(1.0) as u32
    }

    fn check_invariants(&self) {
        debug_assert!(self.cwnd >= 1.0);
        debug_assert!((0.0..=1.0).contains(&self.marked_frac_ewma));
        debug_assert!(self.in_flight <= self.cwnd.ceil() as u32);
    }

    /// Process `acked` newly acknowledged packets, `marked` telling whether
    /// the echoed codepoint was CE.
    pub fn on_ack(&mut self, acked: u32, marked: bool) {
        for _ in 0..acked {
            self.ack_one(marked);
        }
        self.check_invariants();
    }

    fn ack_one(&mut self, marked: bool) {
        match self.class {
            TrafficClass::Classic => {
                if self.cwnd < self.ssthresh {
                    self.cwnd += 1.0; // slow start
                } else {
                    self.cwnd += 1.0 / self.cwnd;
                }
            }
            TrafficClass::Scalable => {
                self.round_acks += 1;
                if marked {
                    self.round_marks += 1;
                }
                if self.round_acks >= self.round_size {
                    self.close_round();
                } else if self.round_marks == 0 {
                    if self.cwnd < self.ssthresh {
                        self.cwnd += 1.0;
                    } else {
                        self.cwnd += 1.0 / self.cwnd;
                    }
                }
            }
        }
    }

    /// One RTT of scalable feedback is complete: fold the round's mark
    /// fraction into the EWMA and apply the proportional reduction.
    fn close_round(&mut self) {
        let frac = self.round_marks as f64 / self.round_acks.max(1) as f64;
        self.marked_frac_ewma += MARK_EWMA_GAIN * (frac - self.marked_frac_ewma);
        if self.round_marks > 0 {
            self.cwnd = (self.cwnd * (1.0 - self.marked_frac_ewma / 2.0)).max(1.0);
            self.ssthresh = self.cwnd;
        } else if self.cwnd < self.ssthresh {
            // the closing ack's growth, skipped in ack_one
            self.cwnd += 1.0;
        } else {
            self.cwnd += 1.0 / self.cwnd;
        }
        self.round_acks = 0;
        self.round_marks = 0;
        self.round_size = self.window_packets();
    }

    /// Loss detected (dup-ACK gap or timeout). Every class falls back to a
    /// multiplicative reduction; cubic mode uses its gentler factor.
    pub fn on_loss(&mut self) {
        let factor = match (self.class, self.growth) {
            (TrafficClass::Classic, GrowthMode::Cubic) => CUBIC_BETA,
            _ => 0.5,
        };
        self.cwnd = (self.cwnd * factor).max(1.0);
        self.ssthresh = self.cwnd;
        self.check_invariants();
    }

    /// Direct reduction for a pinned mark fraction (unit-test access to the
    /// reduction law).
    pub fn apply_mark_fraction(&mut self, frac: f64) {
        self.marked_frac_ewma = frac.clamp(0.0, 1.0);
        self.cwnd = (self.cwnd * (1.0 - self.marked_frac_ewma / 2.0)).max(1.0);
    }
}

/// Mean window (packets per RTT) of one long-lived flow against a fixed
/// Bernoulli drop (classic) or mark (scalable) gate at probability `p`.
fn gate_throughput(class: TrafficClass, p: f64, rounds: u32, rng: &mut Rng) -> f64 {
    let mut fs = FlowState::new(
        FlowId(0),
        class,
        GrowthMode::Reno,
        SimTime::from_millis(10),
        1460,
    );
    let mut slow_start = true; // double until the first congestion signal
    let mut sum = 0.0;
    let mut samples = 0u32;
    for round in 0..rounds {
        let w = fs.window_packets();
        let mut hits = 0u32;
        for _ in 0..w {
            if rng.next_f64() < p {
                hits += 1;
            }
        }
        match class {
            TrafficClass::Classic => {
                if hits > 0 {
                    slow_start = false;
                    fs.on_loss();
                } else if slow_start {
                    fs.cwnd *= 2.0;
                } else {
                    fs.cwnd += 1.0;
                }
            }
            TrafficClass::Scalable => {
                let frac = hits as f64 / w.max(1) as f64;
                fs.marked_frac_ewma += MARK_EWMA_GAIN * (frac - fs.marked_frac_ewma);
                if hits > 0 {
                    slow_start = false;
                    fs.cwnd = (fs.cwnd * (1.0 - fs.marked_frac_ewma / 2.0)).max(1.0);
                } else if slow_start {
                    fs.cwnd *= 2.0;
                } else {
                    fs.cwnd += 1.0;
                }
            }
        }
        // skip the transient half
        if round >= rounds / 2 {
            sum += fs.cwnd;
            samples += 1;
        }
    }
    sum / samples as f64
}

/// Fit the steady-state rate law: least-squares slope of log(rate) against
/// log(p) over the probe probabilities. Classic flows should come out near
/// −1/2, scalable flows near −1.
pub fn steady_state_rate_exponent(
    class: TrafficClass,
    probe_probs: &[f64],
    rounds_per_probe: u32,
    seed: u64,
) -> Result<f64, MetricsError> {
    if probe_probs.len() < 3 {
        return Err(MetricsError::InsufficientData(probe_probs.len()));
    }
    let mut rng = Rng::new(seed);
    let points: Vec<(f64, f64)> = probe_probs
        .iter()
        .map(|&p| {
            // average several independent runs per probe to tame variance
            let reps = 8;
            let mean: f64 = (0..reps)
                .map(|_| gate_throughput(class, p, rounds_per_probe, &mut rng))
                .sum::<f64>()
                / reps as f64;
            (p.ln(), mean.ln())
        })
        .collect();
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    Ok((n * sxy - sx * sy) / (n * sxx - sx * sx))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classic() -> FlowState {
        let mut f = FlowState::new(
            FlowId(1),
            TrafficClass::Classic,
            GrowthMode::Reno,
            SimTime::from_millis(10),
            1460,
        );
        f.ssthresh = 0.0; // congestion avoidance from the start
        f
    }

    #[test]
    fn reno_additive_increase() {
        let mut f = classic();
        f.cwnd = 10.0;
        f.on_ack(1, false);
        assert!((f.cwnd - 10.1).abs() < 1e-12);
    }

    #[test]
    fn reno_halving_and_floor() {
        let mut f = classic();
        f.cwnd = 20.0;
        f.on_loss();
        assert_eq!(f.cwnd, 10.0);
        f.cwnd = 1.0;
        f.on_loss();
        assert_eq!(f.cwnd, 1.0);
    }

    #[test]
    fn cubic_reduction_factor() {
        let mut f = classic();
        f.growth = GrowthMode::Cubic;
        f.cwnd = 20.0;
        f.on_loss();
        assert!((f.cwnd - 14.0).abs() < 1e-12);
    }

    #[test]
    fn scalable_reduction_grid() {
        for (frac, factor) in [(0.0, 1.0), (0.25, 0.875), (0.5, 0.75), (1.0, 0.5)] {
            let mut f = FlowState::new(
                FlowId(2),
                TrafficClass::Scalable,
                GrowthMode::Reno,
                SimTime::from_millis(10),
                1460,
            );
            f.cwnd = 16.0;
            f.apply_mark_fraction(frac);
            assert!((f.cwnd - 16.0 * factor).abs() < 1e-12, "frac {frac}");
        }
    }

    #[test]
    fn slow_start_doubles_per_rtt() {
        let mut f = FlowState::new(
            FlowId(3),
            TrafficClass::Classic,
            GrowthMode::Reno,
            SimTime::from_millis(10),
            1460,
        );
        // one window's worth of ACKs doubles the window below ssthresh
        f.on_ack(1, false);
        assert_eq!(f.cwnd, 2.0);
        f.on_ack(2, false);
        assert_eq!(f.cwnd, 4.0);
    }

    #[test]
    fn exponent_requires_three_probes() {
        let err = steady_state_rate_exponent(TrafficClass::Classic, &[0.01, 0.02], 100, 1);
        assert!(matches!(err, Err(MetricsError::InsufficientData(2))));
    }

    #[test]
    fn classic_rate_law_near_inverse_sqrt() {
        let slope = steady_state_rate_exponent(
            TrafficClass::Classic,
            &[0.001, 0.004, 0.016],
            600,
            7,
        )
        .unwrap();
        assert!((slope + 0.5).abs() <= 0.1, "slope {slope}");
    }

    #[test]
    fn scalable_rate_law_near_inverse_linear() {
        let slope = steady_state_rate_exponent(
            TrafficClass::Scalable,
            &[0.001, 0.004, 0.016],
            600,
            7,
        )
        .unwrap();
        assert!((slope + 1.0).abs() <= 0.15, "slope {slope}");
    }
}
