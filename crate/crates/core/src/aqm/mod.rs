//! Pluggable queue-management algorithms behind a common pair of pipeline
//! hooks. Each implementation registers under a string key and owns only its
//! own registers plus the shared drop-flag table.

mod codel;
mod ired;
mod pi2;
mod taildrop;

pub use codel::{inv_sqrt_q32, CodelState, Q32_ONE};
pub use ired::{Ired, IredDecision, IredState};
pub use pi2::{Pi2, Pi2State};

use crate::engine::Rng;
use crate::model::{AqmConfig, AqmKind, ConfigError, Packet, SimTime};
use crate::switch::{DropFlagTable, EgressVerdict, QueueMetadata};

/// What the ingress hook wants done with a packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AqmIngressVerdict {
    Forward,
    Drop,
    MarkAndForward,
    ConsumeNotification,
}

/// The two pipeline hooks plus an optional control-plane timer.
///
/// Hooks are pure with respect to everything except the algorithm's own
/// registers and the drop-flag table; they are invoked serially by one
/// switch.
pub trait AqmAlgorithm {
    fn kind(&self) -> AqmKind;

    /// Runs in the egress block with full queue metadata.
    fn egress_hook(&mut self, pkt: &Packet, meta: &QueueMetadata, rng: &mut Rng) -> EgressVerdict;

    /// Runs in the ingress block. `ghost_depth` is the egress queue
    /// occupancy, present only when the ghost channel is enabled.
    fn ingress_hook(
        &mut self,
        pkt: &Packet,
        flags: &mut DropFlagTable,
        ghost_depth: Option<u64>,
        rng: &mut Rng,
    ) -> AqmIngressVerdict;

    /// Control-plane tick; `classic_delay` is the freshest queue-delay
    /// sample of the classic queue at tick time.
    fn timer_hook(&mut self, _now: SimTime, _classic_delay: SimTime) {}

    /// `Some` when the algorithm needs a periodic control-plane timer.
    fn timer_interval(&self) -> Option<SimTime> {
        None
    }
}

/// Instantiate the algorithm registered for `cfg.kind`. The port bandwidth
/// converts delay targets into byte thresholds for depth-based variants.
pub fn create(
    cfg: &AqmConfig,
    bandwidth_bps: u64,
) -> Result<Box<dyn AqmAlgorithm>, ConfigError> {
    Ok(match cfg.kind {
        AqmKind::IredDelay | AqmKind::IredDepth | AqmKind::IredGhost => {
            Box::new(ired::Ired::new(cfg, bandwidth_bps))
        }
        AqmKind::Codel => Box::new(codel::Codel::new(cfg)),
        // dualpi2 is the same coupled dual-queue controller under its
        // upstream name
        AqmKind::Pi2 | AqmKind::DualPi2 => Box::new(pi2::Pi2::new(cfg)),
        AqmKind::TailDrop => Box::new(taildrop::TailDrop),
    })
}
