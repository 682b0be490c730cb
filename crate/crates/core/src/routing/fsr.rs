//! Fisheye State Routing.
//!
//! Every node keeps the last reported neighbour list of every other node and
//! broadcasts part of that table on a fixed schedule: entries for nearby
//! origins every inner interval, the whole table every outer interval. There
//! are no triggered updates. Next hops come from a breadth-first search over
//! the stored link state. The modified variant shortens both intervals.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::net::{Ctx, FrameOf, PacketOf, Payload, RoutingProtocol};
use crate::sim::SimTime;
use crate::NodeId;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FsrConfig {
    pub inner_radius: u32,
    pub inner_interval: f64,
    pub outer_interval: f64,
    /// A neighbour silent this long is dropped from the own link list.
    pub neighbor_timeout: f64,
    /// Entries not refreshed this long are purged.
    pub entry_timeout: f64,
    pub max_hops: u32,
}

impl Default for FsrConfig {
    fn default() -> Self {
        Self::with_intervals(5.0, 15.0)
    }
}

impl FsrConfig {
    pub fn modified() -> Self {
        Self::with_intervals(1.0, 3.0)
    }

    pub fn with_intervals(inner: f64, outer: f64) -> Self {
        FsrConfig {
            inner_radius: 2,
            inner_interval: inner,
            outer_interval: outer,
            neighbor_timeout: 3.0 * inner,
            entry_timeout: 6.0 * outer,
            max_hops: 64,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.inner_interval > 0.0) {
            return Err(ConfigError::new("inner_interval", "must be strictly positive"));
        }
        if !(self.inner_interval < self.outer_interval) {
            return Err(ConfigError::new("inner_interval", "must be shorter than outer_interval"));
        }
        if !(self.neighbor_timeout > 0.0 && self.entry_timeout > 0.0) {
            return Err(ConfigError::new("neighbor_timeout", "must be strictly positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scope {
    Inner,
    Outer,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TopologyEntry {
    pub neighbors: BTreeSet<NodeId>,
    pub seq: u32,
    pub last_heard: SimTime,
}

/// One link-state record as carried in an update.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkState {
    pub origin: NodeId,
    pub seq: u32,
    pub neighbors: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FsrUpdate {
    pub full: bool,
    pub entries: Vec<LinkState>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tick;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Route {
    pub next_hop: NodeId,
    pub hops: u32,
}

#[derive(Clone, Debug)]
pub struct Fsr {
    me: NodeId,
    cfg: FsrConfig,
    seq: u32,
    heard: BTreeMap<NodeId, SimTime>,
    table: BTreeMap<NodeId, TopologyEntry>,
    routes: BTreeMap<NodeId, Route>,
    dirty: bool,
    next_full: f64,
    broadcasts: u64,
    full_broadcasts: u64,
}

impl Fsr {
    pub fn new(me: NodeId, cfg: FsrConfig) -> Self {
        Fsr {
            me,
            cfg,
            seq: 0,
            heard: BTreeMap::new(),
            table: BTreeMap::new(),
            routes: BTreeMap::new(),
            dirty: false,
            next_full: 0.0,
            broadcasts: 0,
            full_broadcasts: 0,
        }
    }

    pub fn config(&self) -> &FsrConfig {
        &self.cfg
    }

    /// Updates this node has broadcast (all tiers).
    pub fn broadcasts(&self) -> u64 {
        self.broadcasts
    }

    pub fn full_broadcasts(&self) -> u64 {
        self.full_broadcasts
    }

    pub fn table(&self) -> &BTreeMap<NodeId, TopologyEntry> {
        &self.table
    }

    pub fn seq(&self) -> u32 {
        self.seq
    }

    fn own_neighbors(&self, now: SimTime) -> BTreeSet<NodeId> {
        self.heard
            .iter()
            .filter(|(_, t)| now.as_secs() - t.as_secs() <= self.cfg.neighbor_timeout)
            .map(|(&n, _)| n)
            .collect()
    }

    /// Next-hop table as of `now`, recomputed if anything changed.
    pub fn routes(&mut self, now: SimTime) -> &BTreeMap<NodeId, Route> {
        if self.dirty {
            let own = self.own_neighbors(now);
            self.routes = compute_routes(self.me, &own, &self.table);
            self.dirty = false;
        }
        &self.routes
    }

    pub fn next_hop(&mut self, dest: NodeId, now: SimTime) -> Option<NodeId> {
        self.routes(now).get(&dest).map(|r| r.next_hop)
    }

    pub fn scope_of(&mut self, dest: NodeId, now: SimTime) -> Scope {
        let radius = self.cfg.inner_radius;
        match self.routes(now).get(&dest) {
            Some(r) if r.hops <= radius => Scope::Inner,
            _ => Scope::Outer,
        }
    }

    fn on_tick(&mut self, ctx: &mut Ctx<'_, Self>) {
        let now = ctx.now();
        let t = now.as_secs();
        let purge = self.cfg.entry_timeout;
        let before = self.table.len();
        self.table.retain(|_, e| t - e.last_heard.as_secs() <= purge);
        let lost = self.heard.len();
        let timeout = self.cfg.neighbor_timeout;
        self.heard.retain(|_, h| t - h.as_secs() <= timeout);
        if self.table.len() != before || self.heard.len() != lost {
            self.dirty = true;
        }

        let full = t + 1e-9 >= self.next_full;
        if full {
            self.next_full += self.cfg.outer_interval;
            while self.next_full <= t + 1e-9 {
                self.next_full += self.cfg.outer_interval;
            }
        }
        self.seq += 1;
        let mut entries = vec![LinkState {
            origin: self.me,
            seq: self.seq,
            neighbors: self.own_neighbors(now).into_iter().collect(),
        }];
        let radius = self.cfg.inner_radius;
        let inner: BTreeSet<NodeId> = if full {
            BTreeSet::new()
        } else {
            self.routes(now).iter().filter(|(_, r)| r.hops <= radius).map(|(&d, _)| d).collect()
        };
        for (&origin, e) in &self.table {
            if full || inner.contains(&origin) {
                entries.push(LinkState {
                    origin,
                    seq: e.seq,
                    neighbors: e.neighbors.iter().copied().collect(),
                });
            }
        }
        self.broadcasts += 1;
        if full {
            self.full_broadcasts += 1;
        }
        ctx.broadcast(FsrUpdate { full, entries });
        ctx.set_timer(self.cfg.inner_interval, Tick);
    }

    fn merge(&mut self, update: FsrUpdate, from: NodeId, now: SimTime) {
        if !self.heard.contains_key(&from) {
            self.dirty = true;
        }
        self.heard.insert(from, now);
        for ls in update.entries {
            if ls.origin == self.me {
                continue;
            }
            let newer = self.table.get(&ls.origin).is_none_or(|e| ls.seq > e.seq);
            if newer {
                self.table.insert(
                    ls.origin,
                    TopologyEntry {
                        neighbors: ls.neighbors.into_iter().collect(),
                        seq: ls.seq,
                        last_heard: now,
                    },
                );
                self.dirty = true;
            }
        }
    }

    fn forward(&mut self, ctx: &mut Ctx<'_, Self>, packet: PacketOf<Self>) {
        if packet.hops >= self.cfg.max_hops {
            ctx.drop_data(&packet, "ttl");
            return;
        }
        match self.next_hop(packet.dst, ctx.now()) {
            Some(next) => ctx.unicast(next, Payload::Data(packet)),
            None => ctx.drop_data(&packet, "no-route"),
        }
    }
}

/// Breadth-first search from `me`. Among equal-length paths the next hop
/// with the smallest id wins.
pub fn compute_routes(
    me: NodeId,
    own: &BTreeSet<NodeId>,
    table: &BTreeMap<NodeId, TopologyEntry>,
) -> BTreeMap<NodeId, Route> {
    let mut routes: BTreeMap<NodeId, Route> = BTreeMap::new();
    let mut frontier: VecDeque<NodeId> = VecDeque::new();
    for &n in own {
        if n != me {
            routes.insert(n, Route { next_hop: n, hops: 1 });
            frontier.push_back(n);
        }
    }
    while let Some(u) = frontier.pop_front() {
        let Some(entry) = table.get(&u) else {
            continue;
        };
        let ru = routes[&u];
        for &v in &entry.neighbors {
            if v == me {
                continue;
            }
            match routes.get_mut(&v) {
                None => {
                    routes.insert(
                        v,
                        Route {
                            next_hop: ru.next_hop,
                            hops: ru.hops + 1,
                        },
                    );
                    frontier.push_back(v);
                }
                Some(rv) if rv.hops == ru.hops + 1 && ru.next_hop < rv.next_hop => rv.next_hop = ru.next_hop,
                Some(_) => {}
            }
        }
    }
    routes
}

impl RoutingProtocol for Fsr {
    type Control = FsrUpdate;
    type Header = ();
    type Timer = Tick;

    fn control_bytes(msg: &FsrUpdate) -> u32 {
        4 + msg.entries.iter().map(|e| 8 + 4 * e.neighbors.len() as u32).sum::<u32>()
    }

    fn control_kind(msg: &FsrUpdate) -> &'static str {
        if msg.full {
            "fsr-full"
        } else {
            "fsr-inner"
        }
    }

    fn start(&mut self, ctx: &mut Ctx<'_, Self>) {
        let phase = ctx.rng().random_range(0.0..self.cfg.inner_interval);
        self.next_full = ctx.now().as_secs() + phase;
        ctx.set_timer(phase, Tick);
    }

    fn originate(&mut self, ctx: &mut Ctx<'_, Self>, packet: PacketOf<Self>) {
        self.forward(ctx, packet);
    }

    fn on_control(&mut self, ctx: &mut Ctx<'_, Self>, msg: FsrUpdate, from: NodeId) {
        self.merge(msg, from, ctx.now());
    }

    fn on_data(&mut self, ctx: &mut Ctx<'_, Self>, packet: PacketOf<Self>, from: NodeId) {
        self.heard.insert(from, ctx.now());
        if packet.dst == self.me {
            ctx.deliver(&packet);
        } else {
            self.forward(ctx, packet);
        }
    }

    fn on_overhear(&mut self, ctx: &mut Ctx<'_, Self>, frame: &FrameOf<Self>) {
        if !self.heard.contains_key(&frame.tx) {
            self.dirty = true;
        }
        self.heard.insert(frame.tx, ctx.now());
    }

    fn on_tx_failed(&mut self, ctx: &mut Ctx<'_, Self>, frame: FrameOf<Self>, next_hop: NodeId) {
        self.heard.remove(&next_hop);
        self.dirty = true;
        if let Payload::Data(p) = frame.payload {
            ctx.drop_data(&p, "link-break");
        }
    }

    fn on_timer(&mut self, ctx: &mut Ctx<'_, Self>, _: Tick) {
        self.on_tick(ctx);
    }
}
