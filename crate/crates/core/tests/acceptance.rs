//! End-to-end acceptance checks. Each test prints one `criterion N: PASS/FAIL`
//! line; a FAIL line is followed by the failing assertion so the suite stays
//! honest about what the implementation actually delivers.

use std::time::Instant;

use aqm_sim::aqm::{inv_sqrt_q32, Ired, IredDecision, IredState, Pi2, Q32_ONE};
use aqm_sim::engine::Rng;
use aqm_sim::hosts::steady_state_rate_exponent;
use aqm_sim::metrics::oracle::{
    accounting_oracle, bundled_drop_counts, compare_with_published, savings_ratios,
    WasteMetric, MEMORY_TOLERANCE_MB, ORACLE_AQMS, PUBLISHED_CYCLES, PUBLISHED_WEIGHT_TENTHS,
};
use aqm_sim::metrics::{export_run, WasteLedger};
use aqm_sim::model::{
    preset_scenario, AqmConfig, AqmKind, FlowId, Packet, PortConfig, PortId, Preset, QueueConfig,
    QueueId, SimTime, SqrtMode, TrafficClass, ALL_PRESETS,
};
use aqm_sim::sim::run_scenario;
use aqm_sim::switch::{EgressOutcome, IngressVerdict, Switch};

fn verdict(n: u32, ok: bool, detail: &str) {
    println!(
        "criterion {n}: {} — {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
}

/// Criterion 1: the accounting oracle reproduces the reference waste tables
/// from the bundled drop counts. Cycles match exactly in all 48 cells. The
/// reference weight column for PI2 in configs II..XII was printed with a
/// per-drop constant of 249.6 instead of the 256.6 its own config-I cell
/// uses; those cells are asserted to differ by exactly that print error.
/// Memory agrees within ±0.02 MB except two characterized cells (iRED/VIII
/// and PI2/III), where the recomputation from the drop counts is kept.
#[test]
fn criterion_1_accounting_oracle_reproduction() {
    let started = Instant::now();
    let tables = accounting_oracle(&bundled_drop_counts()).unwrap();

    // spot anchors
    let ired_i = tables.get(Preset::I, AqmKind::IredDelay).unwrap();
    let pi2_i = tables.get(Preset::I, AqmKind::Pi2).unwrap();
    let codel_i = tables.get(Preset::I, AqmKind::Codel).unwrap();
    let anchors = ired_i.cycles == 3_844_476
        && pi2_i.cycles == 12_851_740
        && ired_i.weight_tenths == 40_046_625
        && codel_i.weight_tenths == 60_497_507;

    let mut cycles_exact = true;
    let mut weight_ok = true;
    let mut mem_ok = true;
    for (row, &preset) in ALL_PRESETS.iter().enumerate() {
        for (col, &aqm) in ORACLE_AQMS.iter().enumerate() {
            let cell = tables.get(preset, aqm).unwrap();
            cycles_exact &= cell.cycles == PUBLISHED_CYCLES[row][col];
            let pub_w = PUBLISHED_WEIGHT_TENTHS[row][col];
            if cell.weight_tenths != pub_w {
                // only the mis-printed PI2 column may differ, and exactly by
                // the 249.6-per-drop arithmetic
                weight_ok &= aqm == AqmKind::Pi2 && pub_w == cell.drops * 2496;
            }
        }
    }
    let flagged_mem: Vec<(Preset, AqmKind)> = compare_with_published(&tables)
        .into_iter()
        .filter(|c| c.metric == WasteMetric::Memory && c.flagged)
        .map(|c| (c.preset, c.aqm))
        .collect();
    mem_ok &= flagged_mem.len() == 2
        && flagged_mem.contains(&(Preset::VIII, AqmKind::IredDelay))
        && flagged_mem.contains(&(Preset::III, AqmKind::Pi2));
    for c in compare_with_published(&tables) {
        if c.metric == WasteMetric::Memory && !c.flagged {
            mem_ok &= (c.computed - c.published).abs() <= MEMORY_TOLERANCE_MB;
        }
    }

    let fast = started.elapsed().as_secs_f64() < 1.0;
    let ok = anchors && cycles_exact && weight_ok && mem_ok && fast;
    verdict(
        1,
        ok,
        &format!(
            "anchors {anchors}, cycles exact {cycles_exact}, weight {weight_ok}, \
             memory {mem_ok}, <1s {fast}"
        ),
    );
    assert!(ok);
}

/// Criterion 2: best-case savings ratios across the twelve configurations.
/// The CoDel comparisons and the PI2 memory comparison reach their bars; the
/// PI2 cycles bar of 5.4x is not reachable from the bundled drop counts (the
/// best cycle ratio is 220/108 x the largest drop-count ratio 19246/7625 =
/// 5.1416, config VI), so that assertion fails.
#[test]
fn criterion_2_savings_ratios() {
    let tables = accounting_oracle(&bundled_drop_counts()).unwrap();
    let rows = savings_ratios(&tables);
    let best = |aqm: AqmKind, f: fn(&aqm_sim::metrics::oracle::SavingsRow) -> f64| {
        rows.iter()
            .filter(|r| r.versus == aqm)
            .map(f)
            .fold(0.0f64, f64::max)
    };
    let codel_mem = best(AqmKind::Codel, |r| r.memory_ratio);
    let codel_cyc = best(AqmKind::Codel, |r| r.cycles_ratio);
    let pi2_mem = best(AqmKind::Pi2, |r| r.memory_ratio);
    let pi2_cyc = best(AqmKind::Pi2, |r| r.cycles_ratio);
    let ok = codel_mem >= 10.0 && codel_cyc >= 12.0 && pi2_mem >= 4.7 && pi2_cyc >= 5.4;
    verdict(
        2,
        ok,
        &format!(
            "codel mem {codel_mem:.4} (>=10), codel cycles {codel_cyc:.4} (>=12), \
             pi2 mem {pi2_mem:.4} (>=4.7), pi2 cycles {pi2_cyc:.4} (>=5.4)"
        ),
    );
    assert!(codel_mem >= 10.0 && codel_cyc >= 12.0, "codel savings bars");
    assert!(pi2_mem >= 4.7, "pi2 memory savings bar");
    assert!(pi2_cyc >= 5.4, "pi2 cycles savings bar");
}

fn test_port(capacity: u64) -> PortConfig {
    PortConfig {
        port: PortId(0),
        bandwidth_bps: 1_000_000_000,
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

/// Criterion 3: exact per-drop charging through the live switch path.
#[test]
fn criterion_3_per_drop_charging() {
    const N: u64 = 750;
    let mut rng = Rng::new(5);

    // iRED: each notification arms the flag, the next classic packet at
    // ingress is dropped there.
    let mut sw = Switch::new(&[test_port(50_000_000)], false, Some(1));
    let mut ired = Ired::new(&AqmConfig::defaults(AqmKind::IredDelay), 1_000_000_000);
    let mut ledger = WasteLedger::new();
    for i in 0..N {
        let t = SimTime::from_micros(i);
        let data = Packet::data(i, FlowId(1), TrafficClass::Classic, 1500, t);
        let notif = Packet::notification_for(&data, t);
        let v = sw.ingress_process(notif, &mut ired, &mut rng, &mut ledger);
        assert_eq!(v, IngressVerdict::ConsumeNotification);
        let v = sw.ingress_process(data, &mut ired, &mut rng, &mut ledger);
        assert!(matches!(v, IngressVerdict::Drop(_)), "flag must force a drop");
    }
    let ired_ok = ledger.wasted_memory_bytes == 1548 * N && ledger.wasted_cycles == 108 * N;

    // PI2: p pinned at 1 makes every classic packet a deparser drop.
    let mut sw = Switch::new(&[test_port(50_000_000)], false, Some(1));
    let mut pi2 = Pi2::new(&AqmConfig::defaults(AqmKind::Pi2));
    pi2.state.set_p(1.0);
    let mut ledger = WasteLedger::new();
    for i in 0..N {
        let t = SimTime::from_micros(i * 10);
        let data = Packet::data(i, FlowId(2), TrafficClass::Classic, 1500, t);
        let IngressVerdict::ForwardToTm { pkt, port, queue } =
            sw.ingress_process(data, &mut pi2, &mut rng, &mut ledger)
        else {
            panic!("pi2 never drops at ingress");
        };
        sw.tm_enqueue(pkt, port, queue, AqmKind::Pi2, &mut ledger);
        let out = sw.tm_dequeue(port, t + SimTime::from_micros(5)).unwrap();
        let out = sw.egress_process(out, &mut pi2, &mut rng, &mut ledger, t + SimTime::from_micros(5));
        assert!(matches!(out, EgressOutcome::Dropped));
    }
    let pi2_ok = ledger.wasted_memory_bytes == 3000 * N && ledger.wasted_cycles == 220 * N;

    verdict(3, ired_ok && pi2_ok, &format!("ired exact {ired_ok}, pi2 exact {pi2_ok}"));
    assert!(ired_ok && pi2_ok);
}

/// Criterion 4: fitted steady-state rate-law exponents against a forced
/// drop/mark gate.
#[test]
fn criterion_4_rate_law_exponents() {
    let started = Instant::now();
    let probes = [0.001, 0.004, 0.016];
    let classic = steady_state_rate_exponent(TrafficClass::Classic, &probes, 600, 7).unwrap();
    let scalable = steady_state_rate_exponent(TrafficClass::Scalable, &probes, 600, 7).unwrap();
    let ok = (classic + 0.5).abs() <= 0.1
        && (scalable + 1.0).abs() <= 0.15
        && started.elapsed().as_secs() < 60;
    verdict(
        4,
        ok,
        &format!("classic slope {classic:.3} (-0.5±0.1), scalable slope {scalable:.3} (-1.0±0.15)"),
    );
    assert!(ok);
}

/// Criterion 5: with the probability register pinned and the filter held in
/// the threshold band, scalable marking runs at exactly twice the classic
/// notification rate (3-sigma binomial tolerance over 1e5 packets).
#[test]
fn criterion_5_coupling_ratio() {
    const D: u32 = 8000; // <= 32767 so the halved draw stays meaningful
    const N: u64 = 100_000;
    let ms = 1_000_000u64;
    let mut rng = Rng::new(42);
    let (mut marks, mut notifies) = (0u64, 0u64);
    for i in 0..N {
        let mut s = IredState::new(20 * ms);
        s.ewma = 30 * ms; // mid-band
        s.drop_prob = D;
        let class = if i % 2 == 0 { TrafficClass::Classic } else { TrafficClass::Scalable };
        match s.decide(class, &mut rng) {
            IredDecision::Mark => marks += 1,
            IredDecision::DropOrNotify => notifies += 1,
            IredDecision::Forward => {}
        }
    }
    let half = (N / 2) as f64;
    let p_c = D as f64 / 65_536.0;
    let p_s = 2.0 * p_c;
    let sig_c = (half * p_c * (1.0 - p_c)).sqrt();
    let sig_s = (half * p_s * (1.0 - p_s)).sqrt();
    let ok = (notifies as f64 - half * p_c).abs() < 3.0 * sig_c
        && (marks as f64 - half * p_s).abs() < 3.0 * sig_s;
    verdict(
        5,
        ok,
        &format!(
            "marks {marks} vs expected {:.0}, notifies {notifies} vs expected {:.0}",
            half * p_s,
            half * p_c
        ),
    );
    assert!(ok);
}

/// Criterion 6: preset I compressed to four 10 s phases. The first half —
/// Jain index between the classic and scalable aggregates >= 0.85 in every
/// phase under iRED — holds. The directional half asks phase-1 Jain under
/// PI2 to come out below iRED's; in this model it does not: PI2's squared
/// drop law leaves the lone classic flow nearly signal-free at low
/// multiplexing (very stable), while the per-packet probability walk keeps
/// signalling it, so the ordering is inverted across seeds. The assertion is
/// kept as stated and fails.
#[test]
fn criterion_6_fairness() {
    let started = Instant::now();
    let scale = 10.0 / 120.0;
    let mut cfg = preset_scenario(Preset::I).scaled(scale);
    cfg.seed = 42;
    cfg.aqm = AqmConfig::defaults(AqmKind::IredDelay);
    let ired = run_scenario(&cfg).unwrap().summary.jain_per_phase;
    cfg.aqm = AqmConfig::defaults(AqmKind::Pi2);
    let pi2 = run_scenario(&cfg).unwrap().summary.jain_per_phase;

    let floor_ok = ired.iter().all(|&j| j >= 0.85);
    let direction_ok = pi2[0] < ired[0];
    let fast = started.elapsed().as_secs() < 120;
    verdict(
        6,
        floor_ok && direction_ok && fast,
        &format!(
            "ired jain {:?} (all >=0.85: {floor_ok}), pi2 phase-1 {:.4} < ired phase-1 {:.4}: {direction_ok}",
            ired.iter().map(|j| (j * 1e4).round() / 1e4).collect::<Vec<_>>(),
            pi2[0],
            ired[0]
        ),
    );
    assert!(floor_ok, "jain >= 0.85 in every phase under the ingress-drop AQM");
    assert!(fast, "runtime bound");
    assert!(direction_ok, "pi2 phase-1 jain below ired phase-1 jain");
}

/// Criterion 7: invariant suite over a 1e6-packet randomized switch run plus
/// the fixed-point micro-oracles.
#[test]
fn criterion_7_invariant_suite() {
    // randomized run: arrivals and departures form a controlled random walk
    // that sweeps the queue delay through the threshold band
    let mut sw = Switch::new(&[test_port(200_000_000)], false, Some(1));
    let mut ired = Ired::new(&AqmConfig::defaults(AqmKind::IredDelay), 1_000_000_000);
    let mut ledger = WasteLedger::new();
    let mut rng = Rng::new(2024);
    let step = SimTime::from_micros(10);
    let mut now = SimTime::ZERO;
    let mut bound_ok = true;
    for i in 0..1_000_000u64 {
        now = now + step;
        let class = if rng.next_u64() % 2 == 0 { TrafficClass::Classic } else { TrafficClass::Scalable };
        let size = 100 + (rng.next_u64() % 1400) as u32;
        let pkt = Packet::data(i, FlowId(1 + (i % 7) as u32), class, size, now);
        if let IngressVerdict::ForwardToTm { pkt, port, queue } =
            sw.ingress_process(pkt, &mut ired, &mut rng, &mut ledger)
        {
            sw.tm_enqueue(pkt, port, queue, AqmKind::IredDelay, &mut ledger);
        }
        // keep the classic backlog random-walking around the band edge:
        // served every other slot, ~1000-1800 packets x 10 us lands the
        // classic sojourn around the 20-40 ms threshold band
        let backlog = sw.queue_len_packets(PortId(0), QueueId(0));
        let deq = if backlog > 1800 {
            2
        } else if backlog < 1000 {
            (rng.next_u64() % 4 != 0) as u32 // serve 3 of 4 slots
        } else {
            1
        };
        for _ in 0..deq {
            if let Some(out) = sw.tm_dequeue(PortId(0), now) {
                match sw.egress_process(out, &mut ired, &mut rng, &mut ledger, now) {
                    EgressOutcome::DeliverAndNotify(_, notif) => {
                        let v = sw.ingress_process(notif, &mut ired, &mut rng, &mut ledger);
                        assert_eq!(v, IngressVerdict::ConsumeNotification);
                    }
                    EgressOutcome::Deliver(_) | EgressOutcome::Dropped => {}
                }
            }
        }
        bound_ok &= ired.state.drop_prob <= 65_535;
    }
    let c = &sw.counters;
    let conserved = c.conserved(sw.in_flight_packets());
    let no_egress_drops = c.egress_aqm_drops == 0;
    let no_scalable_drops =
        c.scalable_ingress_drops == 0 && c.scalable_egress_drops == 0 && c.scalable_tail_drops == 0;
    let one_drop_per_notification = c.ingress_aqm_drops <= c.notifications_consumed
        && c.notifications_consumed == c.notifications_emitted;
    let exercised = c.ingress_aqm_drops > 100 && c.scalable_ce_marks > 100;

    // bit-shift EWMA vs the exact filter: each step introduces less than one
    // unit of truncation, and the running gap stays within the 2-unit fixed
    // point of err/2 + 1
    let mut ewma_ok = true;
    let mut s = IredState::new(0);
    let mut exact = 0.0f64;
    let mut r2 = Rng::new(9);
    for _ in 0..100_000 {
        let sample = r2.next_u64() % 60_000_000;
        let from_int = (s.ewma as f64 + sample as f64) / 2.0;
        s.ewma_update(sample);
        ewma_ok &= (from_int - s.ewma as f64).abs() < 1.0;
        exact = 0.5 * (sample as f64) + 0.5 * exact;
        ewma_ok &= (exact - s.ewma as f64).abs() <= 2.0;
    }

    // approximate inverse square root within 2% of exact over the full range
    let mut lpm_ok = true;
    for count in 1..=65_536u64 {
        let approx = inv_sqrt_q32(count, SqrtMode::LpmApprox) as f64 / Q32_ONE as f64;
        let exact = 1.0 / (count as f64).sqrt();
        lpm_ok &= ((approx - exact) / exact).abs() <= 0.02;
    }

    let ok = conserved
        && no_egress_drops
        && no_scalable_drops
        && bound_ok
        && one_drop_per_notification
        && exercised
        && ewma_ok
        && lpm_ok;
    verdict(
        7,
        ok,
        &format!(
            "conserved {conserved}, egress drops 0 {no_egress_drops}, scalable drops 0 \
             {no_scalable_drops}, register bounded {bound_ok}, drops<=notifications \
             {one_drop_per_notification}, ewma {ewma_ok}, inv-sqrt {lpm_ok} \
             (ingress drops {}, marks {})",
            c.ingress_aqm_drops, c.scalable_ce_marks
        ),
    );
    assert!(ok);
}

/// Criterion 8: identical trace hashes and byte-identical exports across two
/// runs of the same scenario and seed.
#[test]
fn criterion_8_determinism() {
    let mut cfg = preset_scenario(Preset::I).scaled(10.0 / 120.0);
    cfg.seed = 42;
    let a = run_scenario(&cfg).unwrap();
    let b = run_scenario(&cfg).unwrap();
    let hashes_equal = a.summary.trace_hash == b.summary.trace_hash;

    let base = std::env::temp_dir().join(format!("aqm-sim-acc8-{}", std::process::id()));
    let dir_a = base.join("a");
    let dir_b = base.join("b");
    export_run(&dir_a, &a.summary, &a.series).unwrap();
    export_run(&dir_b, &b.summary, &b.series).unwrap();
    let mut bytes_equal = true;
    for f in ["summary.json", "summary.csv", "series.csv"] {
        bytes_equal &= std::fs::read(dir_a.join(f)).unwrap() == std::fs::read(dir_b.join(f)).unwrap();
    }
    let _ = std::fs::remove_dir_all(&base);

    verdict(
        8,
        hashes_equal && bytes_equal,
        &format!("trace hash {} equal {hashes_equal}, exports identical {bytes_equal}", a.summary.trace_hash),
    );
    assert!(hashes_equal && bytes_equal);
}
