//! Load generation: the staged flow schedule (cumulative flow counts per
//! phase) and a sinusoid-modulated Poisson arrival process sampled by
//! thinning.

use std::f64::consts::TAU;

use crate::engine::Rng;
use crate::model::{LoadPhase, SimTime, SinusoidConfig};

/// Per-phase deltas: how many new (classic, scalable) flows start at each
/// phase boundary so cumulative totals match the schedule. Existing flows
/// persist; counts never shrink.
pub fn phase_spawn_deltas(phases: &[LoadPhase]) -> Vec<(u64, u32, u32)> {
    let mut out = Vec::with_capacity(phases.len());
    let (mut prev_c, mut prev_p) = (0u32, 0u32);
    for ph in phases {
        debug_assert!(ph.cubic_flows >= prev_c && ph.prague_flows >= prev_p);
        out.push((ph.start_s, ph.cubic_flows - prev_c, ph.prague_flows - prev_p));
        prev_c = ph.cubic_flows;
        prev_p = ph.prague_flows;
    }
    out
}

/// Index of the phase active at `t_s`, or None before the first phase.
pub fn phase_at(phases: &[LoadPhase], t_s: u64) -> Option<usize> {
    phases.iter().rposition(|p| p.start_s <= t_s)
}

/// Instantaneous arrival rate: max(0, base + A·sin(2πFt + λ)).
pub fn sinusoid_rate(cfg: &SinusoidConfig, t_s: f64) -> f64 {
    (cfg.base_rate + cfg.amplitude * (TAU * cfg.frequency_hz * t_s + cfg.phase_rad).sin()).max(0.0)
}

/// Non-homogeneous Poisson arrival sampler (thinning): candidate arrivals
/// are drawn at the envelope rate `base + |A|` and accepted with
/// probability rate(t)/rate_max.
#[derive(Debug, Clone)]
pub struct SinusoidSampler {
    cfg: SinusoidConfig,
    rate_max: f64,
}

impl SinusoidSampler {
    pub fn new(cfg: SinusoidConfig) -> SinusoidSampler {
        SinusoidSampler {
            cfg,
            rate_max: (cfg.base_rate + cfg.amplitude.abs()).max(f64::MIN_POSITIVE),
        }
    }

    pub fn rate_at(&self, t_s: f64) -> f64 {
        sinusoid_rate(&self.cfg, t_s)
    }

    /// Next arrival strictly after `now`, or None if the envelope rate is
    /// zero.
    pub fn next_arrival(&self, now: SimTime, rng: &mut Rng) -> Option<SimTime> {
        if self.rate_max <= f64::MIN_POSITIVE {
            return None;
        }
        let mut t = now.as_secs_f64();
        // thinning loop terminates quickly: acceptance averages rate/rate_max
        for _ in 0..1_000_000 {
            let u: f64 = rng.next_f64();
            t += -u.max(f64::MIN_POSITIVE).ln() / self.rate_max;
            if rng.next_f64() * self.rate_max <= self.rate_at(t) {
                // A near-zero exponential draw can round back onto `now`'s
                // nanosecond tick; bump to keep the "strictly after" contract.
                let at = SimTime::from_secs_f64(t);
                return Some(if at > now { at } else { SimTime::from_nanos(now.as_nanos() + 1) });
            }
        }
        None
    }
}
