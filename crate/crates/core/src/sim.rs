//! Deterministic discrete-event engine.
//!
//! Events are kept in a single ordered map keyed by `(fire_time, seq)`, so
//! dispatch order is a pure function of the scheduling history. Two events
//! scheduled for the same instant fire in the order they were scheduled.
//! Cancellation removes the key, which makes cancelling twice (or after the
//! event already fired) a no-op.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::SimError;

/// Simulated time in seconds.
///
/// Always finite and non-negative. Ordering is total, so `SimTime` can key
/// the event queue directly.
#[derive(Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SimTime(f64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0.0);

    /// Panics on negative or non-finite input; use [`SimTime::try_from_secs`]
    /// for untrusted values.
    pub fn from_secs(secs: f64) -> Self {
        Self::try_from_secs(secs).expect("simulation time must be finite and non-negative")
    }

    pub fn try_from_secs(secs: f64) -> Result<Self, SimError> {
        if secs.is_finite() && secs >= 0.0 {
            // Normalise -0.0 so that equal instants compare equal bitwise too.
            Ok(SimTime(secs + 0.0))
        } else {
            Err(SimError::InvalidTime(secs))
        }
    }

    pub fn as_secs(self) -> f64 {
        self.0
    }

    pub fn plus(self, delay: f64) -> SimTime {
        SimTime::from_secs(self.0 + delay)
    }
}

impl Eq for SimTime {}

impl std::hash::Hash for SimTime {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state);
    }
}

impl PartialOrd for SimTime {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SimTime {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Debug for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}s", self.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}s", self.0)
    }
}

/// Who an event is addressed to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Target {
    Node(u32),
    System,
}

/// Returned by [`Scheduler::schedule`]; the only way to cancel an event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EventHandle {
    time: SimTime,
    seq: u64,
}

impl EventHandle {
    pub fn fire_time(&self) -> SimTime {
        self.time
    }

    pub fn seq(&self) -> u64 {
        self.seq
    }
}

/// A dispatched event.
#[derive(Debug)]
pub struct Event<E> {
    pub time: SimTime,
    pub seq: u64,
    pub target: Target,
    pub payload: E,
}

#[derive(Debug)]
struct Pending<E> {
    target: Target,
    payload: E,
}

/// Event queue plus virtual clock.
#[derive(Debug)]
pub struct Scheduler<E> {
    now: SimTime,
    next_seq: u64,
    queue: BTreeMap<(SimTime, u64), Pending<E>>,
}

impl<E> Default for Scheduler<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> Scheduler<E> {
    pub fn new() -> Self {
        Scheduler {
            now: SimTime::ZERO,
            next_seq: 0,
            queue: BTreeMap::new(),
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn schedule(
        &mut self,
        fire_time: SimTime,
        target: Target,
        payload: E,
    ) -> Result<EventHandle, SimError> {
        if fire_time < self.now {
            return Err(SimError::ScheduleInPast {
                requested: fire_time.as_secs(),
                now: self.now.as_secs(),
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.insert((fire_time, seq), Pending { target, payload });
        Ok(EventHandle {
            time: fire_time,
            seq,
        })
    }

    /// Schedules `delay` seconds from now. Negative delays are rejected.
    pub fn schedule_in(
        &mut self,
        delay: f64,
        target: Target,
        payload: E,
    ) -> Result<EventHandle, SimError> {
        let at = SimTime::try_from_secs(self.now.as_secs() + delay)?;
        if delay < 0.0 {
            return Err(SimError::ScheduleInPast {
                requested: at.as_secs(),
                now: self.now.as_secs(),
            });
        }
        self.schedule(at, target, payload)
    }

    /// Returns `true` if the event was still pending.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        self.queue.remove(&(handle.time, handle.seq)).is_some()
    }

    pub fn is_pending(&self, handle: EventHandle) -> bool {
        self.queue.contains_key(&(handle.time, handle.seq))
    }

    /// Pops the next event if it fires at or before `t_end`, advancing the
    /// clock to its fire time.
    pub fn pop_until(&mut self, t_end: SimTime) -> Option<Event<E>> {
        let entry = self.queue.first_entry()?;
        let &(time, seq) = entry.key();
        if time > t_end {
            return None;
        }
        let pending = entry.remove();
        self.now = time;
        Some(Event {
            time,
            seq,
            target: pending.target,
            payload: pending.payload,
        })
    }

    /// Moves the clock forward without dispatching. Never moves it back.
    pub fn advance_to(&mut self, t: SimTime) {
        if t > self.now {
            self.now = t;
        }
    }

    /// Dispatches every event with `fire_time <= t_end` in `(time, seq)`
    /// order, then leaves the clock at `t_end`. Returns the dispatch count.
    pub fn run_until<F>(&mut self, t_end: SimTime, mut handler: F) -> u64
    where
        F: FnMut(&mut Self, Event<E>),
    {
        let mut dispatched = 0;
        while let Some(ev) = self.pop_until(t_end) {
            dispatched += 1;
            handler(self, ev);
        }
        self.advance_to(t_end);
        dispatched
    }
}

/// Substream offsets. Node `i` uses `base + i` within each family so that
/// adding nodes to one family never shifts another family's draws.
pub mod streams {
    pub const ROUTING: u64 = 0;
    pub const MOBILITY: u64 = 1 << 32;
    pub const MAC: u64 = 2 << 32;
    pub const CHANNEL: u64 = 3 << 32;
    pub const TRAFFIC: u64 = 4 << 32;
    pub const HIGHWAY_LANE: u64 = 5 << 32;
}

/// A reproducible random stream identified by `(master_seed, substream_id)`.
///
/// Backed by ChaCha8 with the substream as the cipher stream id, so streams
/// never overlap.
#[derive(Clone, Debug)]
pub struct RngStream {
    master_seed: u64,
    substream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, substream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(substream_id);
        RngStream {
            master_seed,
            substream_id,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn substream_id(&self) -> u64 {
        self.substream_id
    }
}

impl rand::RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// FNV-1a accumulator for dispatch traces. Stable across hosts and
/// toolchains, which `std`'s hasher does not promise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceDigest(u64);

impl Default for TraceDigest {
    fn default() -> Self {
        TraceDigest(0xcbf2_9ce4_8422_2325)
    }
}

impl TraceDigest {
    pub fn absorb(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 ^= u64::from(*b);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    pub fn record(&mut self, time: SimTime, seq: u64, kind: &str) {
        self.absorb(&time.as_secs().to_bits().to_le_bytes());
        self.absorb(&seq.to_le_bytes());
        self.absorb(kind.as_bytes());
    }

    pub fn value(&self) -> u64 {
        self.0
    }
}
