//! Ad hoc On-demand Distance Vector routing.
//!
//! Expanding-ring route discovery, destination sequence numbers, HELLO
//! neighbour sensing on active routes, local repair of breaks near the
//! destination and gratuitous replies from intermediate nodes. The modified
//! variant is the same state machine with a wider initial ring.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SendBuffer;
use crate::error::ConfigError;
use crate::net::{Ctx, Dest, FrameOf, PacketOf, Payload, RoutingProtocol};
use crate::sim::{EventHandle, SimTime};
use crate::NodeId;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AodvConfig {
    pub ttl_start: u32,
    pub ttl_increment: u32,
    pub ttl_threshold: u32,
    pub net_diameter: u32,
    /// Per-hop traversal estimate used for ring timeouts.
    pub node_traversal_time: f64,
    pub hello_interval: f64,
    pub allowed_hello_loss: u32,
    pub active_route_timeout: f64,
    /// Network-wide attempts after the first one.
    pub rreq_retries: u32,
    pub local_repair: bool,
    pub local_add_ttl: u32,
    pub gratuitous_rrep: bool,
    pub hello_enabled: bool,
    pub buffer_capacity: usize,
}

impl Default for AodvConfig {
    fn default() -> Self {
        AodvConfig {
            ttl_start: 1,
            ttl_increment: 2,
            ttl_threshold: 7,
            net_diameter: 35,
            node_traversal_time: 0.04,
            hello_interval: 1.0,
            allowed_hello_loss: 2,
            active_route_timeout: 3.0,
            rreq_retries: 2,
            local_repair: true,
            local_add_ttl: 2,
            gratuitous_rrep: true,
            hello_enabled: true,
            buffer_capacity: 64,
        }
    }
}

impl AodvConfig {
    pub fn modified() -> Self {
        AodvConfig {
            ttl_start: 2,
            ttl_increment: 4,
            ttl_threshold: 9,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.ttl_start < 1 {
            return Err(ConfigError::new("ttl_start", "must be at least 1"));
        }
        if self.ttl_increment < 1 {
            return Err(ConfigError::new("ttl_increment", "must be at least 1"));
        }
        if self.ttl_threshold >= self.net_diameter {
            return Err(ConfigError::new("ttl_threshold", "must be below net_diameter"));
        }
        if self.ttl_start > self.net_diameter {
            return Err(ConfigError::new("ttl_start", "must not exceed net_diameter"));
        }
        if !(self.hello_interval > 0.0 && self.active_route_timeout > 0.0 && self.node_traversal_time > 0.0) {
            return Err(ConfigError::new("hello_interval", "timers must be strictly positive"));
        }
        if self.buffer_capacity == 0 {
            return Err(ConfigError::new("buffer_capacity", "must be at least 1"));
        }
        Ok(())
    }

    pub fn ring_timeout(&self, ttl: u32) -> f64 {
        2.0 * f64::from(ttl) * self.node_traversal_time
    }

    pub fn net_traversal_time(&self) -> f64 {
        self.ring_timeout(self.net_diameter)
    }

    fn my_route_timeout(&self) -> f64 {
        2.0 * self.active_route_timeout
    }

    fn neighbor_timeout(&self) -> f64 {
        f64::from(self.allowed_hello_loss) * self.hello_interval
    }
}

/// The ring TTL that follows `previous` in an expanding-ring search.
pub fn next_ttl(previous: Option<u32>, cfg: &AodvConfig) -> u32 {
    match previous {
        None => cfg.ttl_start.min(cfg.net_diameter),
        Some(p) if p >= cfg.net_diameter => cfg.net_diameter,
        Some(p) => {
            let next = p + cfg.ttl_increment;
            if next <= cfg.ttl_threshold {
                next
            } else {
                cfg.net_diameter
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RouteState {
    Valid,
    Invalid,
    UnderRepair,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RouteEntry {
    pub dest: NodeId,
    pub next_hop: NodeId,
    pub hop_count: u32,
    pub dest_seq: Option<u32>,
    pub expiry: SimTime,
    pub state: RouteState,
    pub precursors: BTreeSet<NodeId>,
    last_data: Option<SimTime>,
}

impl RouteEntry {
    pub fn is_valid(&self, now: SimTime) -> bool {
        self.state == RouteState::Valid && self.expiry > now
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rreq {
    pub id: u32,
    pub orig: NodeId,
    pub orig_seq: u32,
    pub dest: NodeId,
    pub dest_seq: Option<u32>,
    pub hop_count: u32,
    pub ttl: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rrep {
    /// The node the advertised route leads to.
    pub dest: NodeId,
    pub dest_seq: u32,
    /// The node the reply travels to.
    pub orig: NodeId,
    pub hop_count: u32,
    pub lifetime: f64,
    pub gratuitous: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum AodvMsg {
    Rreq(Rreq),
    Rrep(Rrep),
    Rerr { unreachable: Vec<(NodeId, u32)> },
    Hello { seq: u32 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum AodvTimer {
    Hello,
    Discovery(NodeId),
}

/// One originated route request, kept for inspection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RreqRecord {
    pub at: SimTime,
    pub dest: NodeId,
    pub ttl: u32,
    pub repair: bool,
}

#[derive(Clone, Debug)]
struct Discovery {
    ttl: u32,
    network_tries: u32,
    repair: bool,
    timer: EventHandle,
}

#[derive(Clone, Debug)]
pub struct Aodv {
    me: NodeId,
    cfg: AodvConfig,
    seq: u32,
    rreq_id: u32,
    routes: BTreeMap<NodeId, RouteEntry>,
    seen: BTreeMap<(NodeId, u32), SimTime>,
    buffer: SendBuffer<()>,
    discoveries: BTreeMap<NodeId, Discovery>,
    neighbors: BTreeMap<NodeId, SimTime>,
    originated: Vec<RreqRecord>,
    repairs: u64,
}

impl Aodv {
    pub fn new(me: NodeId, cfg: AodvConfig) -> Self {
        Aodv {
            me,
            cfg,
            seq: 0,
            rreq_id: 0,
            routes: BTreeMap::new(),
            seen: BTreeMap::new(),
            buffer: SendBuffer::new(cfg.buffer_capacity),
            discoveries: BTreeMap::new(),
            neighbors: BTreeMap::new(),
            originated: vec![],
            repairs: 0,
        }
    }

    pub fn config(&self) -> &AodvConfig {
        &self.cfg
    }

    pub fn seq(&self) -> u32 {
        self.seq
    }

    pub fn route(&self, dest: NodeId) -> Option<&RouteEntry> {
        self.routes.get(&dest)
    }

    pub fn routes(&self) -> impl Iterator<Item = &RouteEntry> {
        self.routes.values()
    }

    pub fn valid_route(&self, dest: NodeId, now: SimTime) -> Option<&RouteEntry> {
        self.routes.get(&dest).filter(|r| r.is_valid(now))
    }

    /// Every route request this node originated, in order.
    pub fn originated(&self) -> &[RreqRecord] {
        &self.originated
    }

    pub fn repairs_started(&self) -> u64 {
        self.repairs
    }

    fn has_active_route(&self, now: SimTime) -> bool {
        let window = self.cfg.active_route_timeout;
        self.routes
            .values()
            .any(|r| r.is_valid(now) && r.last_data.is_some_and(|t| now.as_secs() - t.as_secs() <= window))
    }

    /// Applies the sequence-number update rule; returns whether the entry
    /// was created or replaced.
    fn update_route(&mut self, dest: NodeId, next_hop: NodeId, hops: u32, seq: Option<u32>, until: SimTime, now: SimTime) -> bool {
        if dest == self.me {
            return false;
        }
        let Some(e) = self.routes.get_mut(&dest) else {
            self.routes.insert(
                dest,
                RouteEntry {
                    dest,
                    next_hop,
                    hop_count: hops,
                    dest_seq: seq,
                    expiry: until,
                    state: RouteState::Valid,
                    precursors: BTreeSet::new(),
                    last_data: None,
                },
            );
            return true;
        };
        if e.state == RouteState::UnderRepair && seq.is_none() {
            return false;
        }
        let valid = e.is_valid(now);
        let accept = match (seq, e.dest_seq) {
            (Some(n), Some(o)) => n > o || (n == o && (hops < e.hop_count || !valid)),
            (Some(_), None) => true,
            (None, _) => !valid || hops < e.hop_count || e.next_hop == next_hop,
        };
        if accept {
            let same_path = valid && e.next_hop == next_hop;
            e.next_hop = next_hop;
            e.hop_count = hops;
            if seq.is_some() {
                e.dest_seq = seq;
            }
            e.expiry = if same_path { e.expiry.max(until) } else { until };
            e.state = RouteState::Valid;
        }
        accept
    }

    fn touch(&mut self, dest: NodeId, now: SimTime) {
        let until = now.plus(self.cfg.active_route_timeout);
        if let Some(e) = self.routes.get_mut(&dest) {
            if e.is_valid(now) {
                e.expiry = e.expiry.max(until);
                e.last_data = Some(now);
            }
        }
    }

    fn heard(&mut self, ctx: &mut Ctx<'_, Self>, from: NodeId) {
        let now = ctx.now();
        self.neighbors.insert(from, now);
        let until = now.plus(self.cfg.active_route_timeout);
        self.update_route(from, from, 1, None, until, now);
    }

    fn forward(&mut self, ctx: &mut Ctx<'_, Self>, packet: PacketOf<Self>, prev: Option<NodeId>) {
        let now = ctx.now();
        let dst = packet.dst;
        if let Some(next) = self.valid_route(dst, now).map(|r| r.next_hop) {
            self.touch(dst, now);
            self.touch(next, now);
            if let Some(prev) = prev {
                self.routes.get_mut(&dst).expect("valid").precursors.insert(prev);
                self.touch(prev, now);
                self.touch(packet.src, now);
            }
            ctx.unicast(next, Payload::Data(packet));
            return;
        }
        let repairing = self.routes.get(&dst).is_some_and(|r| r.state == RouteState::UnderRepair);
        if repairing || packet.src == self.me {
            self.buffer_packet(ctx, packet);
            if !repairing {
                self.ensure_discovery(ctx, dst);
            }
            return;
        }
        ctx.drop_data(&packet, "no-route");
        if let Some(prev) = prev {
            let seq = self.routes.get(&dst).and_then(|r| r.dest_seq).unwrap_or(0);
            ctx.unicast(prev, Payload::Control(AodvMsg::Rerr { unreachable: vec![(dst, seq)] }));
        }
    }

    fn buffer_packet(&mut self, ctx: &mut Ctx<'_, Self>, packet: PacketOf<Self>) {
        if let Some(old) = self.buffer.push(packet) {
            ctx.drop_data(&old, "buffer-full");
        }
    }

    fn flush(&mut self, ctx: &mut Ctx<'_, Self>, dst: NodeId) {
        for p in self.buffer.take(dst) {
            self.forward(ctx, p, None);
        }
    }

    fn ensure_discovery(&mut self, ctx: &mut Ctx<'_, Self>, dst: NodeId) {
        if self.discoveries.contains_key(&dst) {
            return;
        }
        let ttl = next_ttl(None, &self.cfg);
        self.send_rreq(ctx, dst, ttl, false);
        let timer = ctx.set_timer(self.cfg.ring_timeout(ttl), AodvTimer::Discovery(dst));
        self.discoveries.insert(
            dst,
            Discovery {
                ttl,
                network_tries: 0,
                repair: false,
                timer,
            },
        );
    }

    fn send_rreq(&mut self, ctx: &mut Ctx<'_, Self>, dest: NodeId, ttl: u32, repair: bool) {
        self.seq += 1;
        self.rreq_id += 1;
        self.seen.insert((self.me, self.rreq_id), ctx.now());
        self.originated.push(RreqRecord {
            at: ctx.now(),
            dest,
            ttl,
            repair,
        });
        ctx.broadcast(AodvMsg::Rreq(Rreq {
            id: self.rreq_id,
            orig: self.me,
            orig_seq: self.seq,
            dest,
            dest_seq: self.routes.get(&dest).and_then(|r| r.dest_seq),
            hop_count: 0,
            ttl,
        }));
    }

    fn on_discovery_timeout(&mut self, ctx: &mut Ctx<'_, Self>, dst: NodeId) {
        let Some(mut d) = self.discoveries.remove(&dst) else {
            return;
        };
        if d.repair {
            let mut precursors = BTreeSet::new();
            let mut seq = 0;
            if let Some(r) = self.routes.get_mut(&dst) {
                r.state = RouteState::Invalid;
                precursors = std::mem::take(&mut r.precursors);
                seq = r.dest_seq.unwrap_or(0);
            }
            for p in self.buffer.take(dst) {
                ctx.drop_data(&p, "repair-failed");
            }
            self.send_rerr(ctx, vec![(dst, seq)], &precursors);
            return;
        }
        if d.ttl >= self.cfg.net_diameter {
            d.network_tries += 1;
            if d.network_tries > self.cfg.rreq_retries {
                for p in self.buffer.take(dst) {
                    ctx.drop_data(&p, "no-route");
                }
                return;
            }
        } else {
            d.ttl = next_ttl(Some(d.ttl), &self.cfg);
        }
        self.send_rreq(ctx, dst, d.ttl, false);
        let backoff = f64::from(1u32 << d.network_tries.min(16));
        d.timer = ctx.set_timer(self.cfg.ring_timeout(d.ttl) * backoff, AodvTimer::Discovery(dst));
        self.discoveries.insert(dst, d);
    }

    /// Invalidates every valid route through `neighbor` (except `keep`) and
    /// reports the ones other nodes depend on.
    fn link_break(&mut self, ctx: &mut Ctx<'_, Self>, neighbor: NodeId, keep: Option<NodeId>) {
        let now = ctx.now();
        self.neighbors.remove(&neighbor);
        let mut unreachable = vec![];
        let mut precursors = BTreeSet::new();
        for r in self.routes.values_mut() {
            if r.next_hop != neighbor || !r.is_valid(now) || Some(r.dest) == keep {
                continue;
            }
            r.state = RouteState::Invalid;
            r.dest_seq = r.dest_seq.map(|s| s + 1);
            if !r.precursors.is_empty() {
                unreachable.push((r.dest, r.dest_seq.unwrap_or(0)));
                precursors.append(&mut r.precursors);
            }
        }
        self.send_rerr(ctx, unreachable, &precursors);
    }

    fn send_rerr(&mut self, ctx: &mut Ctx<'_, Self>, unreachable: Vec<(NodeId, u32)>, precursors: &BTreeSet<NodeId>) {
        if unreachable.is_empty() || precursors.is_empty() {
            return;
        }
        let msg = AodvMsg::Rerr { unreachable };
        if precursors.len() == 1 {
            let to = *precursors.first().expect("non-empty");
            ctx.unicast(to, Payload::Control(msg));
        } else {
            ctx.broadcast(msg);
        }
    }

    fn on_rreq(&mut self, ctx: &mut Ctx<'_, Self>, m: Rreq, from: NodeId) {
        let now = ctx.now();
        if m.orig == self.me || self.seen.contains_key(&(m.orig, m.id)) {
            return;
        }
        self.seen.insert((m.orig, m.id), now);
        if self.seen.len() > 4096 {
            let horizon = 2.0 * self.cfg.net_traversal_time();
            self.seen.retain(|_, t| now.as_secs() - t.as_secs() < horizon);
        }
        let hops = m.hop_count + 1;
        let reverse_life = (2.0 * self.cfg.net_traversal_time() - 2.0 * f64::from(hops) * self.cfg.node_traversal_time)
            .max(self.cfg.active_route_timeout);
        self.update_route(m.orig, from, hops, Some(m.orig_seq), now.plus(reverse_life), now);

        if m.dest == self.me {
            self.seq = self.seq.max(m.dest_seq.unwrap_or(0)) + 1;
            let rrep = Rrep {
                dest: self.me,
                dest_seq: self.seq,
                orig: m.orig,
                hop_count: 0,
                lifetime: self.cfg.my_route_timeout(),
                gratuitous: false,
            };
            ctx.unicast(from, Payload::Control(AodvMsg::Rrep(rrep)));
            return;
        }

        let fresh = self.valid_route(m.dest, now).and_then(|r| {
            let s = r.dest_seq?;
            (m.dest_seq.is_none_or(|want| s >= want) && r.next_hop != from).then(|| (r.clone(), s))
        });
        if let Some((r, s)) = fresh {
            self.routes.get_mut(&m.dest).expect("valid").precursors.insert(from);
            if let Some(back) = self.routes.get_mut(&m.orig) {
                back.precursors.insert(r.next_hop);
            }
            let rrep = Rrep {
                dest: m.dest,
                dest_seq: s,
                orig: m.orig,
                hop_count: r.hop_count,
                lifetime: r.expiry.as_secs() - now.as_secs(),
                gratuitous: false,
            };
            ctx.unicast(from, Payload::Control(AodvMsg::Rrep(rrep)));
            if self.cfg.gratuitous_rrep {
                let grat = Rrep {
                    dest: m.orig,
                    dest_seq: m.orig_seq,
                    orig: m.dest,
                    hop_count: hops,
                    lifetime: reverse_life,
                    gratuitous: true,
                };
                ctx.unicast(r.next_hop, Payload::Control(AodvMsg::Rrep(grat)));
            }
            return;
        }

        if m.ttl > 1 {
            let known = self.routes.get(&m.dest).and_then(|r| r.dest_seq);
            let dest_seq = match (m.dest_seq, known) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            };
            ctx.broadcast(AodvMsg::Rreq(Rreq {
                hop_count: hops,
                ttl: m.ttl - 1,
                dest_seq,
                ..m
            }));
        }
    }

    fn on_rrep(&mut self, ctx: &mut Ctx<'_, Self>, m: Rrep, from: NodeId) {
        let now = ctx.now();
        let hops = m.hop_count + 1;
        let updated = self.update_route(m.dest, from, hops, Some(m.dest_seq), now.plus(m.lifetime), now);
        if m.orig == self.me {
            if self.valid_route(m.dest, now).is_some() {
                if let Some(d) = self.discoveries.remove(&m.dest) {
                    ctx.cancel_timer(d.timer);
                }
                self.flush(ctx, m.dest);
            }
            return;
        }
        if !updated {
            return;
        }
        let Some(next) = self.valid_route(m.orig, now).map(|r| r.next_hop) else {
            return;
        };
        self.routes.get_mut(&m.dest).expect("just updated").precursors.insert(next);
        self.routes.get_mut(&m.orig).expect("valid").precursors.insert(from);
        ctx.unicast(next, Payload::Control(AodvMsg::Rrep(Rrep { hop_count: hops, ..m })));
    }

    fn on_rerr(&mut self, ctx: &mut Ctx<'_, Self>, unreachable: Vec<(NodeId, u32)>, from: NodeId) {
        let now = ctx.now();
        let mut out = vec![];
        let mut precursors = BTreeSet::new();
        for (dest, seq) in unreachable {
            let Some(r) = self.routes.get_mut(&dest) else {
                continue;
            };
            if r.next_hop != from || !r.is_valid(now) {
                continue;
            }
            r.state = RouteState::Invalid;
            r.dest_seq = Some(r.dest_seq.map_or(seq, |s| s.max(seq)));
            if !r.precursors.is_empty() {
                out.push((dest, r.dest_seq.unwrap_or(seq)));
                precursors.append(&mut r.precursors);
            }
        }
        self.send_rerr(ctx, out, &precursors);
    }

    fn on_hello_tick(&mut self, ctx: &mut Ctx<'_, Self>) {
        let now = ctx.now();
        if self.has_active_route(now) {
            ctx.broadcast(AodvMsg::Hello { seq: self.seq });
        }
        let limit = self.cfg.neighbor_timeout();
        let lost: Vec<NodeId> = self
            .neighbors
            .iter()
            .filter(|(_, &t)| now.as_secs() - t.as_secs() > limit)
            .map(|(&n, _)| n)
            .collect();
        for n in lost {
            let used = self.routes.values().any(|r| r.next_hop == n && r.is_valid(now) && r.last_data.is_some());
            if used {
                self.link_break(ctx, n, None);
            } else {
                self.neighbors.remove(&n);
            }
        }
        ctx.set_timer(self.cfg.hello_interval, AodvTimer::Hello);
    }
}

impl RoutingProtocol for Aodv {
    type Control = AodvMsg;
    type Header = ();
    type Timer = AodvTimer;

    fn control_bytes(msg: &AodvMsg) -> u32 {
        match msg {
            AodvMsg::Rreq(_) => 24,
            AodvMsg::Rrep(_) | AodvMsg::Hello { .. } => 20,
            AodvMsg::Rerr { unreachable } => 4 + 8 * unreachable.len() as u32,
        }
    }

    fn control_kind(msg: &AodvMsg) -> &'static str {
        match msg {
            AodvMsg::Rreq(_) => "rreq",
            AodvMsg::Rrep(r) if r.gratuitous => "grat-rrep",
            AodvMsg::Rrep(_) => "rrep",
            AodvMsg::Rerr { .. } => "rerr",
            AodvMsg::Hello { .. } => "hello",
        }
    }

    fn start(&mut self, ctx: &mut Ctx<'_, Self>) {
        if self.cfg.hello_enabled {
            let phase = ctx.rng().random_range(0.0..self.cfg.hello_interval);
            ctx.set_timer(phase, AodvTimer::Hello);
        }
    }

    fn originate(&mut self, ctx: &mut Ctx<'_, Self>, packet: PacketOf<Self>) {
        self.forward(ctx, packet, None);
    }

    fn on_control(&mut self, ctx: &mut Ctx<'_, Self>, msg: AodvMsg, from: NodeId) {
        self.heard(ctx, from);
        match msg {
            AodvMsg::Rreq(m) => self.on_rreq(ctx, m, from),
            AodvMsg::Rrep(m) => self.on_rrep(ctx, m, from),
            AodvMsg::Rerr { unreachable } => self.on_rerr(ctx, unreachable, from),
            AodvMsg::Hello { seq } => {
                let now = ctx.now();
                let until = now.plus(self.cfg.neighbor_timeout());
                self.update_route(from, from, 1, Some(seq), until, now);
            }
        }
    }

    fn on_data(&mut self, ctx: &mut Ctx<'_, Self>, packet: PacketOf<Self>, from: NodeId) {
        self.heard(ctx, from);
        if packet.dst == self.me {
            let now = ctx.now();
            self.touch(packet.src, now);
            self.touch(from, now);
            ctx.deliver(&packet);
            return;
        }
        if packet.hops > self.cfg.net_diameter {
            ctx.drop_data(&packet, "ttl");
            return;
        }
        self.forward(ctx, packet, Some(from));
    }

    fn on_overhear(&mut self, ctx: &mut Ctx<'_, Self>, frame: &FrameOf<Self>) {
        self.neighbors.insert(frame.tx, ctx.now());
    }

    fn on_tx_failed(&mut self, ctx: &mut Ctx<'_, Self>, frame: FrameOf<Self>, next_hop: NodeId) {
        let now = ctx.now();
        let Payload::Data(p) = frame.payload else {
            self.link_break(ctx, next_hop, None);
            return;
        };
        debug_assert_eq!(frame.dst, Dest::Node(next_hop));
        let route = self.valid_route(p.dst, now).filter(|r| r.next_hop == next_hop).cloned();
        let Some(route) = route else {
            // The route already moved elsewhere (or is being repaired).
            self.link_break(ctx, next_hop, None);
            self.forward(ctx, p, None);
            return;
        };
        if p.src == self.me {
            self.link_break(ctx, next_hop, None);
            self.buffer_packet(ctx, p);
            self.ensure_discovery(ctx, route.dest);
            return;
        }
        if self.cfg.local_repair && route.hop_count < p.hops {
            let dst = p.dst;
            let ttl = route.hop_count.max(p.hops.div_ceil(2)) + self.cfg.local_add_ttl;
            let r = self.routes.get_mut(&dst).expect("valid");
            r.state = RouteState::UnderRepair;
            r.dest_seq = r.dest_seq.map(|s| s + 1);
            self.link_break(ctx, next_hop, Some(dst));
            self.buffer_packet(ctx, p);
            if let Some(d) = self.discoveries.remove(&dst) {
                ctx.cancel_timer(d.timer);
            }
            self.repairs += 1;
            self.send_rreq(ctx, dst, ttl, true);
            let timer = ctx.set_timer(self.cfg.ring_timeout(ttl), AodvTimer::Discovery(dst));
            self.discoveries.insert(
                dst,
                Discovery {
                    ttl,
                    network_tries: 0,
                    repair: true,
                    timer,
                },
            );
            return;
        }
        ctx.drop_data(&p, "link-break");
        self.link_break(ctx, next_hop, None);
    }

    fn on_timer(&mut self, ctx: &mut Ctx<'_, Self>, timer: AodvTimer) {
        match timer {
            AodvTimer::Hello => self.on_hello_tick(ctx),
            AodvTimer::Discovery(dst) => self.on_discovery_timeout(ctx, dst),
        }
    }
}
