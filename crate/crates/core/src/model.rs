//! Core domain types shared by every other module: simulated time, packets,
//! port/queue configuration, the pipeline cost model and scenario presets.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Simulated time with 1 ns resolution.
///
/// Nanoseconds keep both a 400 Gbps recirculation hop and a 25 Gbps link
/// serialization gap representable as integers.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_nanos(ns: u64) -> Self {
        SimTime(ns)
    }

    pub const fn from_micros(us: u64) -> Self {
        SimTime(us * 1_000)
    }

    pub const fn from_millis(ms: u64) -> Self {
        SimTime(ms * 1_000_000)
    }

    pub const fn from_secs(s: u64) -> Self {
        SimTime(s * 1_000_000_000)
    }

    pub fn from_secs_f64(s: f64) -> Self {
        debug_assert!(s >= 0.0);
        SimTime((s * 1e9).round() as u64)
    }

    pub const fn as_nanos(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e9
    }

    pub fn as_millis_f64(self) -> f64 {
        self.0 as f64 / 1e6
    }

    pub fn saturating_sub(self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(other.0))
    }

    pub fn mul_f64(self, k: f64) -> SimTime {
        SimTime((self.0 as f64 * k).round() as u64)
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        self.0 += rhs.0;
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        debug_assert!(self.0 >= rhs.0, "SimTime subtraction underflow");
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ns", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FlowId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PortId(pub u16);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct QueueId(pub u8);

/// Congestion-control family of a flow. Immutable for the flow's lifetime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrafficClass {
    Classic,
    Scalable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EcnCodepoint {
    NotEct,
    Ect0,
    Ect1,
    Ce,
}

impl TrafficClass {
    /// Codepoint a freshly created packet of this class carries. Only an AQM
    /// may later set CE.
    pub fn initial_ecn(self) -> EcnCodepoint {
        match self {
            TrafficClass::Classic => EcnCodepoint::NotEct,
            TrafficClass::Scalable => EcnCodepoint::Ect1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PacketRole {
    Regular,
    Notification,
    Ack,
}

/// Size of a congestion notification clone in bytes.
pub const NOTIFICATION_BYTES: u32 = 48;

/// A simulated datagram. Headers are abstract fields; there is no payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Packet {
    /// Per-flow sequence number.
    pub id: u64,
    pub flow: FlowId,
    pub class: TrafficClass,
    pub ecn: EcnCodepoint,
    pub size_bytes: u32,
    pub role: PacketRole,
    pub ingress_tstamp: SimTime,
    pub egress_tstamp: Option<SimTime>,
    pub output_port: PortId,
    pub queue: QueueId,
}

impl Packet {
    pub fn data(
        id: u64,
        flow: FlowId,
        class: TrafficClass,
        size_bytes: u32,
        now: SimTime,
    ) -> Packet {
        Packet {
            id,
            flow,
            class,
            ecn: class.initial_ecn(),
            size_bytes,
            role: PacketRole::Regular,
            ingress_tstamp: now,
            egress_tstamp: None,
            output_port: PortId(0),
            queue: QueueId(0),
        }
    }

    /// The 48-byte congestion notification clone for a classic packet.
    pub fn notification_for(pkt: &Packet, now: SimTime) -> Packet {
        Packet {
            id: pkt.id,
            flow: pkt.flow,
            class: pkt.class,
            ecn: EcnCodepoint::NotEct,
            size_bytes: NOTIFICATION_BYTES,
            role: PacketRole::Notification,
            ingress_tstamp: now,
            egress_tstamp: None,
            output_port: pkt.output_port,
            queue: pkt.queue,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.role == PacketRole::Notification && self.size_bytes != NOTIFICATION_BYTES {
            return Err(ConfigError::Invalid(format!(
                "notification packet must be {NOTIFICATION_BYTES} bytes, got {}",
                self.size_bytes
            )));
        }
        if let Some(eg) = self.egress_tstamp {
            if eg < self.ingress_tstamp {
                return Err(ConfigError::Invalid(
                    "egress timestamp precedes ingress timestamp".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueConfig {
    pub queue: QueueId,
    pub capacity_bytes: u64,
    pub is_l4s: bool,
    pub scheduler_weight: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortConfig {
    pub port: PortId,
    pub bandwidth_bps: u64,
    pub queues: Vec<QueueConfig>,
}

impl PortConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.bandwidth_bps == 0 {
            return Err(ConfigError::Invalid("port bandwidth must be > 0".into()));
        }
        if self.queues.is_empty() {
            return Err(ConfigError::Invalid("port needs at least one queue".into()));
        }
        if self.queues.iter().filter(|q| q.is_l4s).count() > 1 {
            return Err(ConfigError::Invalid(
                "at most one L4S queue per port".into(),
            ));
        }
        for q in &self.queues {
            if q.capacity_bytes == 0 {
                return Err(ConfigError::Invalid("queue capacity must be > 0".into()));
            }
        }
        Ok(())
    }
}

/// Per-block cycle and weight constants plus memory rules used to charge
/// every packet's resource consumption.
///
/// Weights are stored in tenths so one-decimal constants accumulate without
/// floating-point drift.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineCostModel {
    pub ingress_cycles: u64,
    pub egress_cycles: u64,
    pub ingress_weight_tenths: u64,
    pub egress_weight_tenths: u64,
    pub notification_bytes: u32,
    pub recirc_latency: SimTime,
    pub egress_drop_memory_multiplier: u64,
}

impl PipelineCostModel {
    pub fn for_aqm(kind: AqmKind) -> PipelineCostModel {
        let (ic, ec, iw, ew) = kind.block_costs();
        PipelineCostModel {
            ingress_cycles: ic,
            egress_cycles: ec,
            ingress_weight_tenths: iw,
            egress_weight_tenths: ew,
            notification_bytes: NOTIFICATION_BYTES,
            recirc_latency: SimTime::from_micros(1), // 0.001 ms per notification
            egress_drop_memory_multiplier: 2,
        }
    }
}

/// Registered AQM implementations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AqmKind {
    IredDelay,
    IredDepth,
    IredGhost,
    Codel,
    Pi2,
    DualPi2,
    TailDrop,
}

pub const AQM_KEYS: &[&str] = &[
    "ired-delay",
    "ired-depth",
    "ired-ghost",
    "codel",
    "pi2",
    "dualpi2",
    "taildrop",
];

impl AqmKind {
    pub fn key(self) -> &'static str {
        match self {
            AqmKind::IredDelay => "ired-delay",
            AqmKind::IredDepth => "ired-depth",
            AqmKind::IredGhost => "ired-ghost",
            AqmKind::Codel => "codel",
            AqmKind::Pi2 => "pi2",
            AqmKind::DualPi2 => "dualpi2",
            AqmKind::TailDrop => "taildrop",
        }
    }

    pub fn from_key(key: &str) -> Result<AqmKind, ConfigError> {
        match key {
            "ired-delay" => Ok(AqmKind::IredDelay),
            "ired-depth" => Ok(AqmKind::IredDepth),
            "ired-ghost" => Ok(AqmKind::IredGhost),
            "codel" => Ok(AqmKind::Codel),
            "pi2" => Ok(AqmKind::Pi2),
            "dualpi2" => Ok(AqmKind::DualPi2),
            "taildrop" => Ok(AqmKind::TailDrop),
            other => Err(ConfigError::UnknownAqm {
                key: other.to_string(),
                known: AQM_KEYS.join(", "),
            }),
        }
    }

    /// Per-block (ingress cycles, egress cycles, ingress weight tenths,
    /// egress weight tenths) measured on hardware for each implementation.
    pub fn block_costs(self) -> (u64, u64, u64, u64) {
        match self {
            AqmKind::IredDelay | AqmKind::IredDepth => (108, 192, 1125, 1588),
            AqmKind::IredGhost => (212, 84, 2080, 316),
            AqmKind::Codel => (60, 196, 138, 1549),
            AqmKind::Pi2 | AqmKind::DualPi2 => (60, 160, 208, 2358),
            AqmKind::TailDrop => (0, 0, 0, 0),
        }
    }

    pub fn requires_ghost(self) -> bool {
        matches!(self, AqmKind::IredGhost)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SqrtMode {
    Exact,
    LpmApprox,
}

/// AQM parameter bundle. Fields not meaningful for a given kind are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AqmConfig {
    pub kind: AqmKind,
    /// Target queue delay; also iRED's minimum delay threshold.
    pub target_delay: SimTime,
    /// Controller interval: 15 ms for PI2, 100 ms for CoDel.
    pub interval: SimTime,
    /// PI integral gain, probability per second of delay error.
    pub alpha: f64,
    /// PI proportional gain, probability per second of delay trend.
    pub beta: f64,
    /// Scalable mark probability = coupling * classic base probability.
    pub coupling: u32,
    pub sqrt_mode: SqrtMode,
}

impl AqmConfig {
    pub fn defaults(kind: AqmKind) -> AqmConfig {
        let interval = match kind {
            AqmKind::Codel => SimTime::from_millis(100),
            _ => SimTime::from_millis(15),
        };
        AqmConfig {
            kind,
            target_delay: SimTime::from_millis(20),
            interval,
            alpha: 0.3125,
            beta: 3.125,
            coupling: 2,
            sqrt_mode: SqrtMode::LpmApprox,
        }
    }

    /// Minimum threshold in the unit the AQM observes. Delay-based: ns.
    pub fn min_threshold_ns(&self) -> u64 {
        self.target_delay.as_nanos()
    }

    /// Depth-based iRED threshold in bytes: the byte equivalent of the target
    /// delay at the given port rate, so delay- and depth-based runs compare.
    pub fn min_threshold_bytes(&self, bandwidth_bps: u64) -> u64 {
        bandwidth_bps / 8 * self.target_delay.as_nanos() / 1_000_000_000
    }
}

/// One load phase: at `start_s`, cumulative flow counts become
/// (`cubic_flows`, `prague_flows`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadPhase {
    pub start_s: u64,
    pub cubic_flows: u32,
    pub prague_flows: u32,
}

/// Sinusoid-modulated Poisson request load (optional background traffic).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinusoidConfig {
    pub base_rate: f64,
    pub amplitude: f64,
    pub frequency_hz: f64,
    pub phase_rad: f64,
}

/// Full experiment description: link shape, AQM, load schedule, seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub bandwidth_mbps: u64,
    pub rtt_ms: u64,
    pub mtu_bytes: u32,
    pub aqm: AqmConfig,
    pub load_phases: Vec<LoadPhase>,
    pub duration_s: u64,
    pub seed: u64,
    pub sinusoid: Option<SinusoidConfig>,
    /// Override for the per-queue buffer; `None` selects the default below.
    pub queue_capacity_bytes: Option<u64>,
    /// Classic queue is guaranteed service once per this many consecutive
    /// L4S dequeues when backlogged. `None` disables the guard.
    pub starvation_guard: Option<u32>,
}

impl ScenarioConfig {
    pub fn bandwidth_bps(&self) -> u64 {
        self.bandwidth_mbps * 1_000_000
    }

    pub fn rtt(&self) -> SimTime {
        SimTime::from_millis(self.rtt_ms)
    }

    /// Sender segment size: MTU minus a fixed 40 B header allowance.
    pub fn mss_bytes(&self) -> u32 {
        self.mtu_bytes.saturating_sub(40).max(1)
    }

    /// Per-queue buffer default: enough bytes for max(2*RTT, 100 ms) at the
    /// port rate. The switch buffer share is not a measured value; the floor
    /// keeps the 40 ms delay threshold reachable at 10 ms-RTT presets.
    pub fn queue_capacity(&self) -> u64 {
        match self.queue_capacity_bytes {
            Some(b) => b,
            None => {
                let window_ns = (2 * self.rtt().as_nanos()).max(100_000_000);
                (self.bandwidth_bps() / 8) * window_ns / 1_000_000_000
            }
        }
    }

    pub fn bottleneck_port(&self) -> PortConfig {
        let cap = self.queue_capacity();
        PortConfig {
            port: PortId(0),
            bandwidth_bps: self.bandwidth_bps(),
            queues: vec![
                QueueConfig {
                    queue: QueueId(0),
                    capacity_bytes: cap,
                    is_l4s: false,
                    scheduler_weight: 1,
                },
                QueueConfig {
                    queue: QueueId(1),
                    capacity_bytes: cap,
                    is_l4s: true,
                    scheduler_weight: 1,
                },
            ],
        }
    }

    /// Shrink phase lengths (not flow counts) by `1/scale_div`-style factor.
    /// `scale` is the multiplier applied to every phase start and the total
    /// duration.
    pub fn scaled(&self, scale: f64) -> ScenarioConfig {
        let mut out = self.clone();
        out.duration_s = ((self.duration_s as f64 * scale).round() as u64).max(1);
        for p in &mut out.load_phases {
            p.start_s = (p.start_s as f64 * scale).round() as u64;
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.load_phases.is_empty() {
            return Err(ConfigError::Invalid("no load phases".into()));
        }
        if !self
            .load_phases
            .windows(2)
            .all(|w| w[0].start_s < w[1].start_s)
        {
            return Err(ConfigError::Invalid(
                "load phases must be sorted by start time".into(),
            ));
        }
        if self.duration_s < self.load_phases.last().unwrap().start_s {
            return Err(ConfigError::Invalid(
                "duration does not cover the last phase".into(),
            ));
        }
        if self.mtu_bytes <= 40 {
            return Err(ConfigError::Invalid("mtu too small".into()));
        }
        self.bottleneck_port().validate()
    }
}

/// The twelve preset configurations (bandwidth, RTT, MTU).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    I,
    II,
    III,
    IV,
    V,
    VI,
    VII,
    VIII,
    IX,
    X,
    XI,
    XII,
}

pub const ALL_PRESETS: [Preset; 12] = [
    Preset::I,
    Preset::II,
    Preset::III,
    Preset::IV,
    Preset::V,
    Preset::VI,
    Preset::VII,
    Preset::VIII,
    Preset::IX,
    Preset::X,
    Preset::XI,
    Preset::XII,
];

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::I => "I",
            Preset::II => "II",
            Preset::III => "III",
            Preset::IV => "IV",
            Preset::V => "V",
            Preset::VI => "VI",
            Preset::VII => "VII",
            Preset::VIII => "VIII",
            Preset::IX => "IX",
            Preset::X => "X",
            Preset::XI => "XI",
            Preset::XII => "XII",
        }
    }

    /// (bandwidth Mbps, RTT ms, MTU bytes)
    pub fn link(self) -> (u64, u64, u32) {
        match self {
            Preset::I => (120, 10, 1500),
            Preset::II => (120, 50, 1500),
            Preset::III => (1000, 10, 1500),
            Preset::IV => (1000, 50, 1500),
            Preset::V => (120, 10, 800),
            Preset::VI => (120, 50, 800),
            Preset::VII => (1000, 10, 800),
            Preset::VIII => (1000, 50, 800),
            Preset::IX => (120, 10, 400),
            Preset::X => (120, 50, 400),
            Preset::XI => (1000, 10, 400),
            Preset::XII => (1000, 50, 400),
        }
    }
}

impl FromStr for Preset {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let up = s.trim().to_ascii_uppercase();
        ALL_PRESETS
            .into_iter()
            .find(|p| p.name() == up)
            .ok_or_else(|| ConfigError::UnknownPreset(s.to_string()))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The standard four-phase flow schedule shared by all presets.
pub fn preset_phases() -> Vec<LoadPhase> {
    vec![
        LoadPhase { start_s: 0, cubic_flows: 1, prague_flows: 1 },
        LoadPhase { start_s: 120, cubic_flows: 2, prague_flows: 2 },
        LoadPhase { start_s: 240, cubic_flows: 10, prague_flows: 10 },
        LoadPhase { start_s: 360, cubic_flows: 25, prague_flows: 25 },
    ]
}

/// Build the scenario for one of the twelve presets with iRED defaults.
pub fn preset_scenario(preset: Preset) -> ScenarioConfig {
    let (bw, rtt, mtu) = preset.link();
    ScenarioConfig {
        name: preset.name().to_string(),
        bandwidth_mbps: bw,
        rtt_ms: rtt,
        mtu_bytes: mtu,
        aqm: AqmConfig::defaults(AqmKind::IredDelay),
        load_phases: preset_phases(),
        duration_s: 480,
        seed: 1,
        sinusoid: None,
        queue_capacity_bytes: None,
        // N = 1: alternate between the queues whenever both are backlogged,
        // approximating an even scheduler share while keeping the low-latency
        // queue strictly first when the classic queue is idle
        starvation_guard: Some(1),
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown preset `{0}` (expected a roman numeral I..XII)")]
    UnknownPreset(String),
    #[error("unknown AQM key `{key}` (registered: {known})")]
    UnknownAqm { key: String, known: String },
    #[error("ghost mode is not enabled for this scenario")]
    GhostUnavailable,
    #[error("invalid configuration: {0}")]
    Invalid(String),
}
