//! Routing agents and the protocol selector.

pub mod aodv;
pub mod dsr;
pub mod fsr;

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::net::DataPacket;
use crate::NodeId;

/// The six protocol variants a scenario can select.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProtocolKind {
    Aodv,
    ModAodv,
    Dsr,
    ModDsr,
    Fsr,
    ModFsr,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 6] = [
        ProtocolKind::Aodv,
        ProtocolKind::ModAodv,
        ProtocolKind::Dsr,
        ProtocolKind::ModDsr,
        ProtocolKind::Fsr,
        ProtocolKind::ModFsr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Aodv => "aodv",
            ProtocolKind::ModAodv => "mod-aodv",
            ProtocolKind::Dsr => "dsr",
            ProtocolKind::ModDsr => "mod-dsr",
            ProtocolKind::Fsr => "fsr",
            ProtocolKind::ModFsr => "mod-fsr",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }

    pub fn is_modified(self) -> bool {
        matches!(self, ProtocolKind::ModAodv | ProtocolKind::ModDsr | ProtocolKind::ModFsr)
    }

    /// The base protocol family: "aodv", "dsr" or "fsr".
    pub fn family(self) -> &'static str {
        match self {
            ProtocolKind::Aodv | ProtocolKind::ModAodv => "aodv",
            ProtocolKind::Dsr | ProtocolKind::ModDsr => "dsr",
            ProtocolKind::Fsr | ProtocolKind::ModFsr => "fsr",
        }
    }
}

impl std::fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-destination FIFO of packets waiting for a route. Each queue holds at
/// most `capacity` packets; the oldest is pushed out when full.
#[derive(Clone, Debug)]
pub struct SendBuffer<H> {
    capacity: usize,
    queues: BTreeMap<NodeId, VecDeque<DataPacket<H>>>,
}

impl<H> SendBuffer<H> {
    pub fn new(capacity: usize) -> Self {
        SendBuffer {
            capacity,
            queues: BTreeMap::new(),
        }
    }

    /// Returns the packet pushed out, if any.
    pub fn push(&mut self, packet: DataPacket<H>) -> Option<DataPacket<H>> {
        let q = self.queues.entry(packet.dst).or_default();
        q.push_back(packet);
        if q.len() > self.capacity {
            q.pop_front()
        } else {
            None
        }
    }

    pub fn take(&mut self, dst: NodeId) -> Vec<DataPacket<H>> {
        self.queues.remove(&dst).map(Vec::from).unwrap_or_default()
    }

    pub fn len(&self, dst: NodeId) -> usize {
        self.queues.get(&dst).map_or(0, VecDeque::len)
    }

    pub fn is_empty(&self) -> bool {
        self.queues.values().all(VecDeque::is_empty)
    }

    pub fn destinations(&self) -> Vec<NodeId> {
        self.queues.iter().filter(|(_, q)| !q.is_empty()).map(|(&d, _)| d).collect()
    }

    /// Removes and returns packets for `dst` matching `pred`.
    pub fn extract_if(&mut self, dst: NodeId, mut pred: impl FnMut(&DataPacket<H>) -> bool) -> Vec<DataPacket<H>> {
        let Some(q) = self.queues.get_mut(&dst) else {
            return vec![];
        };
        let (out, keep): (Vec<_>, Vec<_>) = q.drain(..).partition(|p| pred(p));
        *q = keep.into();
        out
    }
}
