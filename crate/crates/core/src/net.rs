//! Packet-level network engine.
//!
//! One [`Network`] owns the event queue, the mobility process, every node's
//! MAC state and routing agent, and the metrics ledger. Routing protocols
//! plug in through [`RoutingProtocol`]; they see only the frames they
//! receive (or overhear), MAC failure notifications, and their own timers.

use std::fmt;

use rand::Rng;

use crate::metrics::MetricsLedger;
use crate::mobility::{Mobility, Position};
use crate::radio::{reception_probability, ChannelModel, Enqueued, MacConfig, PriQueue};
use crate::sim::{streams, Event, EventHandle, RngStream, Scheduler, SimTime, Target, TraceDigest};
use crate::traffic::CbrFlow;
use crate::NodeId;

/// Link-layer destination.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dest {
    Node(NodeId),
    Broadcast,
}

/// An application datagram plus whatever per-packet state the routing
/// protocol carries with it.
#[derive(Clone, Debug, PartialEq)]
pub struct DataPacket<H> {
    pub id: u64,
    pub flow: u32,
    pub src: NodeId,
    pub dst: NodeId,
    pub sent_at: SimTime,
    pub payload_bytes: u32,
    /// Link-layer hops travelled so far.
    pub hops: u32,
    pub header: H,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload<C, H> {
    Data(DataPacket<H>),
    Control(C),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameKind {
    Data,
    Control,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Frame<C, H> {
    /// The transmitting node.
    pub tx: NodeId,
    pub dst: Dest,
    pub payload: Payload<C, H>,
}

impl<C, H> Frame<C, H> {
    pub fn kind(&self) -> FrameKind {
        match self.payload {
            Payload::Data(_) => FrameKind::Data,
            Payload::Control(_) => FrameKind::Control,
        }
    }
}

pub type FrameOf<P> = Frame<<P as RoutingProtocol>::Control, <P as RoutingProtocol>::Header>;
pub type PacketOf<P> = DataPacket<<P as RoutingProtocol>::Header>;
pub type PayloadOf<P> = Payload<<P as RoutingProtocol>::Control, <P as RoutingProtocol>::Header>;

/// A per-node routing agent.
pub trait RoutingProtocol: Sized {
    type Control: Clone + fmt::Debug;
    type Header: Clone + fmt::Debug + Default;
    type Timer: Clone + fmt::Debug;

    /// Routing-layer bytes of a control message.
    fn control_bytes(msg: &Self::Control) -> u32;
    /// Short label used in control-transmission breakdowns.
    fn control_kind(msg: &Self::Control) -> &'static str;
    /// Routing-layer bytes added to a data packet.
    fn header_bytes(_header: &Self::Header) -> u32 {
        0
    }

    fn start(&mut self, _ctx: &mut Ctx<'_, Self>) {}
    /// The local application emitted `packet`.
    fn originate(&mut self, ctx: &mut Ctx<'_, Self>, packet: PacketOf<Self>);
    fn on_control(&mut self, ctx: &mut Ctx<'_, Self>, msg: Self::Control, from: NodeId);
    /// A data frame addressed to this node arrived (its `hops` already
    /// counts the link it just crossed).
    fn on_data(&mut self, ctx: &mut Ctx<'_, Self>, packet: PacketOf<Self>, from: NodeId);
    /// A unicast frame addressed to someone else was received.
    fn on_overhear(&mut self, _ctx: &mut Ctx<'_, Self>, _frame: &FrameOf<Self>) {}
    /// The MAC gave up on a unicast frame after exhausting its attempts.
    fn on_tx_failed(&mut self, ctx: &mut Ctx<'_, Self>, frame: FrameOf<Self>, next_hop: NodeId);
    fn on_timer(&mut self, ctx: &mut Ctx<'_, Self>, timer: Self::Timer);
}

pub fn frame_bytes<P: RoutingProtocol>(frame: &FrameOf<P>) -> u32 {
    match &frame.payload {
        Payload::Data(p) => p.payload_bytes + P::header_bytes(&p.header),
        Payload::Control(c) => P::control_bytes(c),
    }
}

pub enum NetEvent<P: RoutingProtocol> {
    Traffic { flow: usize, k: u64 },
    MacAttempt { node: NodeId },
    TxEnd { tx: u64 },
    MacDone { node: NodeId, delivered: bool },
    Timer { node: NodeId, timer: P::Timer },
    DelayedSend { node: NodeId, dst: Dest, payload: PayloadOf<P> },
}

impl<P: RoutingProtocol> fmt::Debug for NetEvent<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind())
    }
}

impl<P: RoutingProtocol> NetEvent<P> {
    pub fn kind(&self) -> &'static str {
        match self {
            NetEvent::Traffic { .. } => "traffic",
            NetEvent::MacAttempt { .. } => "mac-attempt",
            NetEvent::TxEnd { .. } => "tx-end",
            NetEvent::MacDone { .. } => "mac-done",
            NetEvent::Timer { .. } => "timer",
            NetEvent::DelayedSend { .. } => "delayed-send",
        }
    }
}

struct Outgoing<P: RoutingProtocol> {
    node: NodeId,
    dst: Dest,
    payload: PayloadOf<P>,
    delay: f64,
}

/// What a routing agent may do while handling a callback.
pub struct Ctx<'a, P: RoutingProtocol> {
    node: NodeId,
    now: SimTime,
    sched: &'a mut Scheduler<NetEvent<P>>,
    rng: &'a mut RngStream,
    out: &'a mut Vec<Outgoing<P>>,
    ledger: &'a mut MetricsLedger,
}

impl<P: RoutingProtocol> Ctx<'_, P> {
    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn rng(&mut self) -> &mut RngStream {
        self.rng
    }

    pub fn unicast(&mut self, next_hop: NodeId, payload: PayloadOf<P>) {
        self.send_after(0.0, Dest::Node(next_hop), payload);
    }

    pub fn broadcast(&mut self, msg: P::Control) {
        self.send_after(0.0, Dest::Broadcast, Payload::Control(msg));
    }

    /// Hands a frame to the MAC after `delay` seconds.
    pub fn send_after(&mut self, delay: f64, dst: Dest, payload: PayloadOf<P>) {
        self.out.push(Outgoing {
            node: self.node,
            dst,
            payload,
            delay,
        });
    }

    pub fn set_timer(&mut self, delay: f64, timer: P::Timer) -> EventHandle {
        self.sched
            .schedule_in(delay.max(0.0), Target::Node(self.node.0), NetEvent::Timer { node: self.node, timer })
            .expect("timer delay is non-negative")
    }

    pub fn cancel_timer(&mut self, handle: EventHandle) {
        self.sched.cancel(handle);
    }

    /// The packet reached its destination application.
    pub fn deliver(&mut self, packet: &PacketOf<P>) {
        self.ledger
            .record_delivery(packet.id, packet.flow, self.now, packet.hops, packet.payload_bytes);
    }

    pub fn drop_data(&mut self, packet: &PacketOf<P>, reason: &str) {
        self.ledger.record_drop(packet.id, reason);
    }
}

/// Static parameters of a network instance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NetConfig {
    pub channel: ChannelModel,
    pub mac: MacConfig,
    pub warmup: f64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MacStats {
    pub attempts: u64,
    pub unicast_delivered: u64,
    pub tx_failed: u64,
    pub queue_drops: u64,
    pub deferrals: u64,
}

/// One physical transmission, kept for the airtime audit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TxRecord {
    pub sender: NodeId,
    pub start: f64,
    pub end: f64,
    pub kind: FrameKind,
}

struct InFlight<P: RoutingProtocol> {
    frame: FrameOf<P>,
    attempts: u32,
    cw: u32,
}

struct MacNode<P: RoutingProtocol> {
    queue: PriQueue<FrameOf<P>>,
    current: Option<InFlight<P>>,
}

struct Transmission<P: RoutingProtocol> {
    id: u64,
    sender: NodeId,
    start: f64,
    end: f64,
    frame: FrameOf<P>,
}

pub struct Network<P: RoutingProtocol> {
    cfg: NetConfig,
    sched: Scheduler<NetEvent<P>>,
    mobility: Mobility,
    agents: Vec<P>,
    macs: Vec<MacNode<P>>,
    routing_rngs: Vec<RngStream>,
    mac_rngs: Vec<RngStream>,
    channel_rng: RngStream,
    medium: Vec<Transmission<P>>,
    max_airtime: f64,
    reach: f64,
    flows: Vec<CbrFlow>,
    ledger: MetricsLedger,
    stats: MacStats,
    next_packet: u64,
    next_tx: u64,
    outbox: Vec<Outgoing<P>>,
    digest: TraceDigest,
    dispatched: u64,
    started: bool,
    tx_log: Option<Vec<TxRecord>>,
}

impl<P: RoutingProtocol> Network<P> {
    /// `agents[i]` runs on node `i`; the mobility process must cover the
    /// same node count.
    pub fn new(cfg: NetConfig, mobility: Mobility, agents: Vec<P>) -> Self {
        assert_eq!(mobility.node_count(), agents.len(), "one agent per node");
        let n = agents.len() as u64;
        Network {
            sched: Scheduler::new(),
            mobility,
            macs: (0..n)
                .map(|_| MacNode {
                    queue: PriQueue::new(cfg.mac.queue_capacity),
                    current: None,
                })
                .collect(),
            routing_rngs: (0..n).map(|i| RngStream::new(cfg.seed, streams::ROUTING + i)).collect(),
            mac_rngs: (0..n).map(|i| RngStream::new(cfg.seed, streams::MAC + i)).collect(),
            channel_rng: RngStream::new(cfg.seed, streams::CHANNEL),
            agents,
            medium: vec![],
            max_airtime: 0.0,
            reach: cfg.channel.max_reach(),
            flows: vec![],
            ledger: MetricsLedger::new(cfg.warmup),
            stats: MacStats::default(),
            next_packet: 0,
            next_tx: 0,
            outbox: vec![],
            digest: TraceDigest::default(),
            dispatched: 0,
            started: false,
            tx_log: None,
            cfg,
        }
    }

    pub fn add_flow(&mut self, flow: CbrFlow) {
        let idx = self.flows.len();
        self.flows.push(flow);
        if flow.emission(0).is_some() {
            let at = SimTime::from_secs(flow.start).max(self.sched.now());
            self.sched
                .schedule(at, Target::Node(flow.src.0), NetEvent::Traffic { flow: idx, k: 0 })
                .expect("not in the past");
        }
    }

    pub fn record_transmissions(&mut self) {
        self.tx_log.get_or_insert_with(Vec::new);
    }

    pub fn transmissions(&self) -> &[TxRecord] {
        self.tx_log.as_deref().unwrap_or(&[])
    }

    pub fn now(&self) -> SimTime {
        self.sched.now()
    }

    pub fn ledger(&self) -> &MetricsLedger {
        &self.ledger
    }

    pub fn into_ledger(self) -> MetricsLedger {
        self.ledger
    }

    pub fn mac_stats(&self) -> MacStats {
        self.stats
    }

    pub fn agent(&self, node: NodeId) -> &P {
        &self.agents[node.index()]
    }

    pub fn agents(&self) -> &[P] {
        &self.agents
    }

    pub fn mobility(&self) -> &Mobility {
        &self.mobility
    }

    pub fn flows(&self) -> &[CbrFlow] {
        &self.flows
    }

    /// Digest of every dispatched `(time, seq, kind)` so far.
    pub fn trace_digest(&self) -> u64 {
        self.digest.value()
    }

    pub fn dispatched(&self) -> u64 {
        self.dispatched
    }

    pub fn run_until(&mut self, t_end: f64) -> u64 {
        let t_end = SimTime::from_secs(t_end);
        if !self.started {
            self.started = true;
            for i in 0..self.agents.len() {
                self.with_agent(NodeId(i as u32), |a, ctx| a.start(ctx));
            }
        }
        let before = self.dispatched;
        while let Some(ev) = self.sched.pop_until(t_end) {
            self.dispatched += 1;
            self.digest.record(ev.time, ev.seq, ev.payload.kind());
            self.dispatch(ev);
        }
        self.sched.advance_to(t_end);
        self.dispatched - before
    }

    fn dispatch(&mut self, ev: Event<NetEvent<P>>) {
        match ev.payload {
            NetEvent::Traffic { flow, k } => self.on_traffic(flow, k),
            NetEvent::MacAttempt { node } => self.on_mac_attempt(node),
            NetEvent::TxEnd { tx } => self.on_tx_end(tx),
            NetEvent::MacDone { node, delivered } => self.on_mac_done(node, delivered),
            NetEvent::Timer { node, timer } => self.with_agent(node, |a, ctx| a.on_timer(ctx, timer)),
            NetEvent::DelayedSend { node, dst, payload } => self.enqueue(Frame { tx: node, dst, payload }),
        }
    }

    fn with_agent<R>(&mut self, node: NodeId, f: impl FnOnce(&mut P, &mut Ctx<'_, P>) -> R) -> R {
        let i = node.index();
        let mut ctx = Ctx {
            node,
            now: self.sched.now(),
            sched: &mut self.sched,
            rng: &mut self.routing_rngs[i],
            out: &mut self.outbox,
            ledger: &mut self.ledger,
        };
        let r = f(&mut self.agents[i], &mut ctx);
        self.flush_outbox();
        r
    }

    fn flush_outbox(&mut self) {
        let out = std::mem::take(&mut self.outbox);
        for o in out {
            if o.delay > 0.0 {
                self.sched
                    .schedule_in(
                        o.delay,
                        Target::Node(o.node.0),
                        NetEvent::DelayedSend {
                            node: o.node,
                            dst: o.dst,
                            payload: o.payload,
                        },
                    )
                    .expect("positive delay");
            } else {
                self.enqueue(Frame {
                    tx: o.node,
                    dst: o.dst,
                    payload: o.payload,
                });
            }
        }
    }

    fn on_traffic(&mut self, idx: usize, k: u64) {
        let flow = self.flows[idx];
        let now = self.sched.now();
        let id = self.next_packet;
        self.next_packet += 1;
        self.ledger.record_sent(id, now);
        let packet = DataPacket {
            id,
            flow: idx as u32,
            src: flow.src,
            dst: flow.dst,
            sent_at: now,
            payload_bytes: flow.payload,
            hops: 0,
            header: P::Header::default(),
        };
        if let Some(next) = flow.emission(k + 1) {
            self.sched
                .schedule(
                    SimTime::from_secs(next),
                    Target::Node(flow.src.0),
                    NetEvent::Traffic { flow: idx, k: k + 1 },
                )
                .expect("emissions move forward");
        }
        self.with_agent(flow.src, |a, ctx| a.originate(ctx, packet));
    }

    // ---- MAC ----

    fn enqueue(&mut self, frame: FrameOf<P>) {
        let i = frame.tx.index();
        let is_control = frame.kind() == FrameKind::Control;
        if let Enqueued::Dropped(victim) = self.macs[i].queue.push(frame, is_control) {
            self.stats.queue_drops += 1;
            if let Payload::Data(p) = &victim.payload {
                self.ledger.record_drop(p.id, "ifq-full");
            }
        }
        self.start_next(NodeId(i as u32));
    }

    fn start_next(&mut self, node: NodeId) {
        let mac = &mut self.macs[node.index()];
        if mac.current.is_some() {
            return;
        }
        let Some(frame) = mac.queue.pop() else {
            return;
        };
        let jitter = if frame.dst == Dest::Broadcast && self.cfg.mac.broadcast_jitter > 0.0 {
            self.mac_rngs[node.index()].random_range(0.0..self.cfg.mac.broadcast_jitter)
        } else {
            0.0
        };
        mac.current = Some(InFlight {
            frame,
            attempts: 0,
            cw: self.cfg.mac.cw_min,
        });
        self.schedule_attempt(node, jitter);
    }

    fn schedule_attempt(&mut self, node: NodeId, extra: f64) {
        let i = node.index();
        let cw = self.macs[i].current.as_ref().map_or(0, |c| c.cw);
        let delay = extra + self.cfg.mac.difs + self.cfg.mac.backoff(cw, &mut self.mac_rngs[i]);
        self.sched
            .schedule_in(delay, Target::Node(node.0), NetEvent::MacAttempt { node })
            .expect("non-negative delay");
    }

    fn position(&self, node: NodeId) -> Position {
        self.mobility.position_at(node, self.sched.now()).expect("known node")
    }

    fn on_mac_attempt(&mut self, node: NodeId) {
        let now = self.sched.now().as_secs();
        if !self.cfg.mac.is_ideal() {
            let me = self.position(node);
            let range = self.cfg.channel.nominal_range();
            let busy_until = self
                .medium
                .iter()
                .filter(|t| t.end > now && t.sender != node)
                .filter(|t| self.position(t.sender).distance(&me) <= range)
                .map(|t| t.end)
                .fold(None, |acc: Option<f64>, e| Some(acc.map_or(e, |a| a.max(e))));
            if let Some(until) = busy_until {
                self.stats.deferrals += 1;
                self.schedule_attempt(node, until - now);
                return;
            }
        }
        self.begin_tx(node);
    }

    fn begin_tx(&mut self, node: NodeId) {
        let now = self.sched.now();
        let cur = self.macs[node.index()].current.as_mut().expect("attempt without frame");
        cur.attempts += 1;
        let first = cur.attempts == 1;
        let frame = cur.frame.clone();
        self.stats.attempts += 1;
        if first {
            if let Payload::Control(c) = &frame.payload {
                self.ledger.record_control(P::control_kind(c), now);
            }
        }
        let airtime = self
            .cfg
            .mac
            .airtime(frame_bytes::<P>(&frame), self.cfg.channel.data_rate);
        self.max_airtime = self.max_airtime.max(airtime);
        let id = self.next_tx;
        self.next_tx += 1;
        let start = now.as_secs();
        if let Some(log) = &mut self.tx_log {
            log.push(TxRecord {
                sender: node,
                start,
                end: start + airtime,
                kind: frame.kind(),
            });
        }
        self.medium.push(Transmission {
            id,
            sender: node,
            start,
            end: start + airtime,
            frame,
        });
        self.sched
            .schedule_in(airtime, Target::Node(node.0), NetEvent::TxEnd { tx: id })
            .expect("positive airtime");
    }

    fn on_tx_end(&mut self, id: u64) {
        let now = self.sched.now().as_secs();
        let pos = self.mobility.positions_at(self.sched.now());
        let idx = self.medium.iter().position(|t| t.id == id).expect("transmission on air");
        let (sender, start, end) = {
            let t = &self.medium[idx];
            (t.sender, t.start, t.end)
        };
        let range = self.cfg.channel.nominal_range();
        let ideal = self.cfg.mac.is_ideal();

        let reach2 = self.reach * self.reach;
        let me = pos[sender.index()];
        let mut receivers = vec![];
        for n in 0..pos.len() {
            if n == sender.index() {
                continue;
            }
            let (dx, dy) = (me.x - pos[n].x, me.y - pos[n].y);
            let d2 = dx * dx + dy * dy;
            if d2 > reach2 {
                continue;
            }
            let d = d2.sqrt();
            if d > self.reach {
                continue;
            }
            let p = reception_probability(d, &self.cfg.channel);
            let heard = p >= 1.0 || (p > 0.0 && self.channel_rng.random::<f64>() < p);
            if !heard {
                continue;
            }
            if !ideal {
                let clobbered = self.medium.iter().any(|o| {
                    o.id != id
                        && o.start < end
                        && o.end > start
                        && (o.sender.index() == n || pos[o.sender.index()].distance(&pos[n]) <= range)
                });
                if clobbered {
                    continue;
                }
            }
            receivers.push(NodeId(n as u32));
        }

        let frame = self.medium[idx].frame.clone();
        let horizon = now - self.max_airtime;
        self.medium.retain(|t| t.end >= horizon);

        match frame.dst {
            Dest::Broadcast => {
                self.macs[sender.index()].current = None;
                for r in receivers {
                    self.deliver_frame(r, frame.clone());
                }
                self.start_next(sender);
            }
            Dest::Node(dst) => {
                let ok = receivers.contains(&dst);
                for &r in receivers.iter().filter(|&&r| r != dst) {
                    self.with_agent(r, |a, ctx| a.on_overhear(ctx, &frame));
                }
                let wait = self.cfg.mac.ack_wait(self.cfg.channel.data_rate);
                if ok {
                    self.stats.unicast_delivered += 1;
                    self.deliver_frame(dst, frame);
                    self.schedule_done(sender, wait, true);
                } else {
                    let cur = self.macs[sender.index()].current.as_mut().expect("frame in flight");
                    if cur.attempts >= self.cfg.mac.retry_limit {
                        self.schedule_done(sender, wait, false);
                    } else {
                        cur.cw = self.cfg.mac.next_cw(cur.cw);
                        self.schedule_attempt(sender, wait);
                    }
                }
            }
        }
    }

    fn schedule_done(&mut self, node: NodeId, wait: f64, delivered: bool) {
        self.sched
            .schedule_in(wait, Target::Node(node.0), NetEvent::MacDone { node, delivered })
            .expect("non-negative wait");
    }

    fn deliver_frame(&mut self, to: NodeId, frame: FrameOf<P>) {
        let from = frame.tx;
        match frame.payload {
            Payload::Control(c) => self.with_agent(to, |a, ctx| a.on_control(ctx, c, from)),
            Payload::Data(mut p) => {
                p.hops += 1;
                self.with_agent(to, |a, ctx| a.on_data(ctx, p, from))
            }
        }
    }

    fn on_mac_done(&mut self, node: NodeId, delivered: bool) {
        let cur = self.macs[node.index()].current.take().expect("frame in flight");
        if !delivered {
            self.stats.tx_failed += 1;
            if let Dest::Node(next_hop) = cur.frame.dst {
                self.with_agent(node, |a, ctx| a.on_tx_failed(ctx, cur.frame, next_hop));
            }
        }
        self.start_next(node);
    }
}
