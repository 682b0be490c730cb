//! Dynamic Source Routing.
//!
//! Route discovery accumulates the path in the request; data packets carry
//! the full route. Nodes learn routes from every request, reply, data packet
//! and (when promiscuous) every overheard frame, keep them in a bounded LRU
//! cache, salvage packets over alternative routes after a break, and send
//! gratuitous replies when they overhear a packet that could skip hops. The
//! modified variant only shrinks the cache.

mod cache;

pub use cache::{check_route, has_link, CacheEntry, Inserted, RouteCache};

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SendBuffer;
use crate::error::ConfigError;
use crate::net::{Ctx, Dest, FrameOf, PacketOf, Payload, RoutingProtocol};
use crate::sim::{EventHandle, SimTime};
use crate::NodeId;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DsrConfig {
    pub cache_capacity: usize,
    pub promiscuous: bool,
    pub reply_from_cache: bool,
    pub gratuitous_rrep: bool,
    pub max_salvage: u32,
    pub send_buffer_capacity: usize,
    pub send_buffer_timeout: f64,
    pub discovery_initial_timeout: f64,
    pub discovery_max_timeout: f64,
    pub max_route_len: usize,
    /// Upper bound of the uniform delay before a reply from the cache.
    pub reply_jitter: f64,
    /// Minimum spacing of gratuitous replies for one (source, destination).
    pub gratuitous_holdoff: f64,
}

impl Default for DsrConfig {
    fn default() -> Self {
        DsrConfig {
            cache_capacity: RouteCache::DEFAULT_CAPACITY,
            promiscuous: true,
            reply_from_cache: true,
            gratuitous_rrep: true,
            max_salvage: 15,
            send_buffer_capacity: 64,
            send_buffer_timeout: 30.0,
            discovery_initial_timeout: 0.5,
            discovery_max_timeout: 16.0,
            max_route_len: 16,
            reply_jitter: 0.01,
            gratuitous_holdoff: 1.0,
        }
    }
}

impl DsrConfig {
    pub fn modified() -> Self {
        DsrConfig {
            cache_capacity: RouteCache::MODIFIED_CAPACITY,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.cache_capacity == 0 {
            return Err(ConfigError::new("cache_capacity", "must be at least 1"));
        }
        if self.send_buffer_capacity == 0 {
            return Err(ConfigError::new("send_buffer_capacity", "must be at least 1"));
        }
        if !(self.discovery_initial_timeout > 0.0 && self.discovery_max_timeout >= self.discovery_initial_timeout) {
            return Err(ConfigError::new(
                "discovery_initial_timeout",
                "must be positive and not above discovery_max_timeout",
            ));
        }
        if self.max_route_len < 2 {
            return Err(ConfigError::new("max_route_len", "must be at least 2"));
        }
        Ok(())
    }
}

/// Source route carried by a data packet. `index` is the position of the
/// node currently holding (or transmitting) the packet.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SourceRoute {
    pub path: Vec<NodeId>,
    pub index: usize,
    pub salvage: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DsrMsg {
    Rreq {
        id: u32,
        orig: NodeId,
        target: NodeId,
        /// Nodes visited so far, starting at `orig`.
        path: Vec<NodeId>,
    },
    Rrep {
        /// The discovered route, requester first.
        route: Vec<NodeId>,
        /// Hop-by-hop path from the replier back to the requester.
        back: Vec<NodeId>,
        pos: usize,
        gratuitous: bool,
    },
    Rerr {
        from: NodeId,
        to: NodeId,
        back: Vec<NodeId>,
        pos: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum DsrTimer {
    Discovery(NodeId),
}

#[derive(Clone, Debug)]
struct Discovery {
    attempt: u32,
    timer: EventHandle,
}

#[derive(Clone, Debug)]
pub struct Dsr {
    me: NodeId,
    cfg: DsrConfig,
    cache: RouteCache,
    rreq_id: u32,
    seen: BTreeMap<(NodeId, u32), SimTime>,
    buffer: SendBuffer<SourceRoute>,
    discoveries: BTreeMap<NodeId, Discovery>,
    gratuitous_sent: BTreeMap<(NodeId, NodeId), SimTime>,
    salvaged: u64,
}

impl Dsr {
    pub fn new(me: NodeId, cfg: DsrConfig) -> Self {
        Dsr {
            me,
            cfg,
            cache: RouteCache::new(me, cfg.cache_capacity),
            rreq_id: 0,
            seen: BTreeMap::new(),
            buffer: SendBuffer::new(cfg.send_buffer_capacity),
            discoveries: BTreeMap::new(),
            gratuitous_sent: BTreeMap::new(),
            salvaged: 0,
        }
    }

    pub fn cache(&self) -> &RouteCache {
        &self.cache
    }

    pub fn cache_mut(&mut self) -> &mut RouteCache {
        &mut self.cache
    }

    pub fn salvaged(&self) -> u64 {
        self.salvaged
    }

    fn learn(&mut self, route: Vec<NodeId>, now: SimTime) {
        if route.len() >= 2 && route[0] == self.me && check_route(&route).is_ok() {
            self.cache.insert(route, now).expect("checked");
        }
    }

    /// Caches both directions of `path` as seen from this node's position.
    fn learn_path(&mut self, path: &[NodeId], now: SimTime) {
        let Some(i) = path.iter().position(|&n| n == self.me) else {
            return;
        };
        self.learn(path[i..].to_vec(), now);
        self.learn(path[..=i].iter().rev().copied().collect(), now);
    }

    fn send(&mut self, ctx: &mut Ctx<'_, Self>, mut p: PacketOf<Self>) {
        let now = ctx.now();
        match self.cache.lookup(p.dst, now) {
            Some(route) => {
                let next = route[1];
                p.header = SourceRoute {
                    path: route,
                    index: 0,
                    salvage: p.header.salvage,
                };
                ctx.unicast(next, Payload::Data(p));
            }
            None => {
                let dst = p.dst;
                if let Some(old) = self.buffer.push(p) {
                    ctx.drop_data(&old, "buffer-full");
                }
                self.ensure_discovery(ctx, dst);
            }
        }
    }

    fn ensure_discovery(&mut self, ctx: &mut Ctx<'_, Self>, dst: NodeId) {
        if self.discoveries.contains_key(&dst) {
            return;
        }
        self.send_rreq(ctx, dst);
        let timer = ctx.set_timer(self.cfg.discovery_initial_timeout, DsrTimer::Discovery(dst));
        self.discoveries.insert(dst, Discovery { attempt: 0, timer });
    }

    fn send_rreq(&mut self, ctx: &mut Ctx<'_, Self>, target: NodeId) {
        self.rreq_id += 1;
        self.seen.insert((self.me, self.rreq_id), ctx.now());
        ctx.broadcast(DsrMsg::Rreq {
            id: self.rreq_id,
            orig: self.me,
            target,
            path: vec![self.me],
        });
    }

    fn flush(&mut self, ctx: &mut Ctx<'_, Self>) {
        for dst in self.buffer.destinations() {
            if self.cache.peek(dst).is_none() {
                continue;
            }
            if let Some(d) = self.discoveries.remove(&dst) {
                ctx.cancel_timer(d.timer);
            }
            for p in self.buffer.take(dst) {
                self.send(ctx, p);
            }
        }
    }

    fn expire_buffer(&mut self, ctx: &mut Ctx<'_, Self>, dst: NodeId) {
        let horizon = ctx.now().as_secs() - self.cfg.send_buffer_timeout;
        for p in self.buffer.extract_if(dst, |p| p.sent_at.as_secs() < horizon) {
            ctx.drop_data(&p, "buffer-timeout");
        }
    }

    fn on_discovery_timeout(&mut self, ctx: &mut Ctx<'_, Self>, dst: NodeId) {
        let Some(mut d) = self.discoveries.remove(&dst) else {
            return;
        };
        self.expire_buffer(ctx, dst);
        if self.buffer.len(dst) == 0 {
            return;
        }
        if self.cache.peek(dst).is_some() {
            self.flush(ctx);
            return;
        }
        d.attempt += 1;
        let wait = self.cfg.discovery_initial_timeout * f64::from(1u32 << d.attempt.min(30));
        if wait > self.cfg.discovery_max_timeout {
            for p in self.buffer.take(dst) {
                ctx.drop_data(&p, "no-route");
            }
            return;
        }
        self.send_rreq(ctx, dst);
        d.timer = ctx.set_timer(wait, DsrTimer::Discovery(dst));
        self.discoveries.insert(dst, d);
    }

    fn send_along(ctx: &mut Ctx<'_, Self>, msg: DsrMsg) {
        let next = match &msg {
            DsrMsg::Rrep { back, pos, .. } | DsrMsg::Rerr { back, pos, .. } => back[*pos],
            DsrMsg::Rreq { .. } => unreachable!("requests are broadcast"),
        };
        ctx.unicast(next, Payload::Control(msg));
    }

    fn on_rreq(&mut self, ctx: &mut Ctx<'_, Self>, id: u32, orig: NodeId, target: NodeId, path: Vec<NodeId>) {
        let now = ctx.now();
        if orig == self.me || path.contains(&self.me) {
            return;
        }
        let mut full = path;
        full.push(self.me);
        self.learn(full.iter().rev().copied().collect(), now);
        let back: Vec<NodeId> = full.iter().rev().copied().collect();

        if target == self.me {
            Self::send_along(
                ctx,
                DsrMsg::Rrep {
                    route: full,
                    back,
                    pos: 1,
                    gratuitous: false,
                },
            );
            return;
        }
        if self.seen.contains_key(&(orig, id)) {
            return;
        }
        self.seen.insert((orig, id), now);
        if self.seen.len() > 4096 {
            let horizon = 2.0 * self.cfg.send_buffer_timeout;
            self.seen.retain(|_, t| now.as_secs() - t.as_secs() < horizon);
        }

        if self.cfg.reply_from_cache {
            if let Some(cached) = self.cache.peek(target) {
                let mut route = full.clone();
                route.extend_from_slice(&cached[1..]);
                if check_route(&route).is_ok() {
                    self.cache.lookup(target, now);
                    let delay = if self.cfg.reply_jitter > 0.0 {
                        ctx.rng().random_range(0.0..self.cfg.reply_jitter)
                    } else {
                        0.0
                    };
                    let msg = DsrMsg::Rrep {
                        route,
                        back,
                        pos: 1,
                        gratuitous: false,
                    };
                    ctx.send_after(delay, Dest::Node(full[full.len() - 2]), Payload::Control(msg));
                    return;
                }
            }
        }

        if full.len() < self.cfg.max_route_len {
            ctx.broadcast(DsrMsg::Rreq {
                id,
                orig,
                target,
                path: full,
            });
        }
    }

    fn on_rrep(&mut self, ctx: &mut Ctx<'_, Self>, route: Vec<NodeId>, back: Vec<NodeId>, pos: usize, gratuitous: bool) {
        if back.get(pos) != Some(&self.me) {
            return;
        }
        self.learn_path(&route, ctx.now());
        if pos + 1 == back.len() {
            self.flush(ctx);
        } else {
            Self::send_along(
                ctx,
                DsrMsg::Rrep {
                    route,
                    back,
                    pos: pos + 1,
                    gratuitous,
                },
            );
        }
    }

    fn on_rerr(&mut self, ctx: &mut Ctx<'_, Self>, from: NodeId, to: NodeId, back: Vec<NodeId>, pos: usize) {
        self.cache.remove_link(from, to);
        if back.get(pos) == Some(&self.me) && pos + 1 < back.len() {
            Self::send_along(ctx, DsrMsg::Rerr { from, to, back, pos: pos + 1 });
        }
    }

    fn maybe_gratuitous(&mut self, ctx: &mut Ctx<'_, Self>, path: &[NodeId], tx_index: usize) {
        let now = ctx.now();
        let src = path[0];
        let dst = *path.last().expect("non-empty route");
        let remaining = path.len() - 1 - tx_index;
        let mut shortcut = path.iter().position(|&n| n == self.me).filter(|&j| j > tx_index + 1).map(|j| path[j..].to_vec());
        if let Some(h) = self.cache.hops_to(dst) {
            if h < remaining.saturating_sub(1) && shortcut.as_ref().is_none_or(|s| h + 1 < s.len()) {
                shortcut = self.cache.peek(dst);
            }
        }
        let Some(tail) = shortcut else {
            return;
        };
        if 1 + (tail.len() - 1) >= remaining {
            return;
        }
        let mut route = path[..=tx_index].to_vec();
        route.extend_from_slice(&tail);
        if check_route(&route).is_err() {
            return;
        }
        if self
            .gratuitous_sent
            .get(&(src, dst))
            .is_some_and(|t| now.as_secs() - t.as_secs() < self.cfg.gratuitous_holdoff)
        {
            return;
        }
        self.gratuitous_sent.insert((src, dst), now);
        let back: Vec<NodeId> = std::iter::once(self.me).chain(path[..=tx_index].iter().rev().copied()).collect();
        Self::send_along(
            ctx,
            DsrMsg::Rrep {
                route,
                back,
                pos: 1,
                gratuitous: true,
            },
        );
    }
}

impl RoutingProtocol for Dsr {
    type Control = DsrMsg;
    type Header = SourceRoute;
    type Timer = DsrTimer;

    fn control_bytes(msg: &DsrMsg) -> u32 {
        let n = match msg {
            DsrMsg::Rreq { path, .. } => path.len(),
            DsrMsg::Rrep { route, .. } => route.len(),
            DsrMsg::Rerr { back, .. } => back.len(),
        };
        24 + 4 * n as u32
    }

    fn control_kind(msg: &DsrMsg) -> &'static str {
        match msg {
            DsrMsg::Rreq { .. } => "rreq",
            DsrMsg::Rrep { gratuitous: true, .. } => "grat-rrep",
            DsrMsg::Rrep { .. } => "rrep",
            DsrMsg::Rerr { .. } => "rerr",
        }
    }

    fn header_bytes(h: &SourceRoute) -> u32 {
        4 + 4 * h.path.len() as u32
    }

    fn originate(&mut self, ctx: &mut Ctx<'_, Self>, packet: PacketOf<Self>) {
        self.send(ctx, packet);
    }

    fn on_control(&mut self, ctx: &mut Ctx<'_, Self>, msg: DsrMsg, _from: NodeId) {
        match msg {
            DsrMsg::Rreq { id, orig, target, path } => self.on_rreq(ctx, id, orig, target, path),
            DsrMsg::Rrep {
                route,
                back,
                pos,
                gratuitous,
            } => self.on_rrep(ctx, route, back, pos, gratuitous),
            DsrMsg::Rerr { from, to, back, pos } => self.on_rerr(ctx, from, to, back, pos),
        }
    }

    fn on_data(&mut self, ctx: &mut Ctx<'_, Self>, mut p: PacketOf<Self>, _from: NodeId) {
        p.header.index += 1;
        if p.header.path.get(p.header.index) != Some(&self.me) {
            ctx.drop_data(&p, "bad-route");
            return;
        }
        self.learn_path(&p.header.path.clone(), ctx.now());
        if p.dst == self.me {
            ctx.deliver(&p);
            return;
        }
        let next = p.header.path[p.header.index + 1];
        ctx.unicast(next, Payload::Data(p));
    }

    fn on_overhear(&mut self, ctx: &mut Ctx<'_, Self>, frame: &FrameOf<Self>) {
        if !self.cfg.promiscuous {
            return;
        }
        let now = ctx.now();
        match &frame.payload {
            Payload::Data(p) => {
                let path = &p.header.path;
                let i = p.header.index;
                if path.get(i) != Some(&frame.tx) {
                    return;
                }
                if !path.contains(&self.me) {
                    let fwd: Vec<NodeId> = [self.me].into_iter().chain(path[i..].iter().copied()).collect();
                    let rev: Vec<NodeId> = [self.me].into_iter().chain(path[..=i].iter().rev().copied()).collect();
                    self.learn(fwd, now);
                    self.learn(rev, now);
                }
                if self.cfg.gratuitous_rrep {
                    let path = path.clone();
                    self.maybe_gratuitous(ctx, &path, i);
                }
            }
            Payload::Control(DsrMsg::Rerr { from, to, .. }) => {
                self.cache.remove_link(*from, *to);
            }
            Payload::Control(_) => {}
        }
    }

    fn on_tx_failed(&mut self, ctx: &mut Ctx<'_, Self>, frame: FrameOf<Self>, next_hop: NodeId) {
        let now = ctx.now();
        self.cache.remove_link(self.me, next_hop);
        let Payload::Data(mut p) = frame.payload else {
            return;
        };
        let i = p.header.index;
        if i > 0 {
            let back: Vec<NodeId> = p.header.path[..=i].iter().rev().copied().collect();
            Self::send_along(
                ctx,
                DsrMsg::Rerr {
                    from: self.me,
                    to: next_hop,
                    back,
                    pos: 1,
                },
            );
        }
        if p.src == self.me {
            self.send(ctx, p);
            return;
        }
        if p.header.salvage < self.cfg.max_salvage {
            if let Some(route) = self.cache.lookup(p.dst, now) {
                let next = route[1];
                p.header = SourceRoute {
                    path: route,
                    index: 0,
                    salvage: p.header.salvage + 1,
                };
                self.salvaged += 1;
                ctx.unicast(next, Payload::Data(p));
                return;
            }
        }
        ctx.drop_data(&p, "link-break");
    }

    fn on_timer(&mut self, ctx: &mut Ctx<'_, Self>, timer: DsrTimer) {
        match timer {
            DsrTimer::Discovery(dst) => self.on_discovery_timeout(ctx, dst),
        }
    }
}
