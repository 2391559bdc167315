//! Baseline discipline: no AQM logic at all. Loss happens only at Traffic
//! Manager admission when a queue is full, which the switch handles itself.

use crate::engine::Rng;
use crate::model::{AqmKind, Packet, PacketRole};
use crate::switch::{DropFlagTable, EgressVerdict, QueueMetadata};

use super::{AqmAlgorithm, AqmIngressVerdict};

pub struct TailDrop;

impl AqmAlgorithm for TailDrop {
    fn kind(&self) -> AqmKind {
        AqmKind::TailDrop
    }

    fn egress_hook(
        &mut self,
        _pkt: &Packet,
        _meta: &QueueMetadata,
        _rng: &mut Rng,
    ) -> EgressVerdict {
        EgressVerdict::Forward
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
