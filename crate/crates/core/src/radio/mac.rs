//! CSMA/CA parameters, the interface queue and backoff arithmetic.
//!
//! The medium itself (carrier sense, collisions, retries) is driven by the
//! network engine; this module holds the pieces that do not need to see
//! other nodes.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MacPreset {
    Dot11,
    Dot11p,
    /// Lossless link abstraction: no contention, no collisions and no jitter.
    /// Each hop costs exactly the frame airtime. Used for oracle checks.
    Ideal,
}

impl MacPreset {
    pub fn name(self) -> &'static str {
        match self {
            MacPreset::Dot11 => "80211",
            MacPreset::Dot11p => "80211p",
            MacPreset::Ideal => "ideal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "80211" => Some(MacPreset::Dot11),
            "80211p" => Some(MacPreset::Dot11p),
            "ideal" => Some(MacPreset::Ideal),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MacConfig {
    pub preset: MacPreset,
    pub slot: f64,
    pub sifs: f64,
    pub difs: f64,
    pub cw_min: u32,
    pub cw_max: u32,
    /// Total transmission attempts for a unicast frame.
    pub retry_limit: u32,
    /// MAC + IP + UDP header bytes added to every frame.
    pub header_overhead: u32,
    pub ack_bytes: u32,
    pub queue_capacity: usize,
    /// Upper bound of the uniform delay before a broadcast's first attempt.
    pub broadcast_jitter: f64,
}

impl MacConfig {
    pub fn dot11() -> Self {
        MacConfig {
            preset: MacPreset::Dot11,
            slot: 20e-6,
            sifs: 10e-6,
            difs: 50e-6,
            cw_min: 31,
            cw_max: 1023,
            retry_limit: 7,
            header_overhead: 56,
            ack_bytes: 14,
            queue_capacity: 50,
            broadcast_jitter: 0.01,
        }
    }

    pub fn dot11p() -> Self {
        MacConfig {
            preset: MacPreset::Dot11p,
            slot: 13e-6,
            sifs: 32e-6,
            difs: 58e-6,
            cw_min: 15,
            cw_max: 1023,
            ..Self::dot11()
        }
    }

    pub fn ideal() -> Self {
        MacConfig {
            preset: MacPreset::Ideal,
            slot: 0.0,
            sifs: 0.0,
            difs: 0.0,
            cw_min: 0,
            cw_max: 0,
            broadcast_jitter: 0.0,
            ack_bytes: 0,
            ..Self::dot11()
        }
    }

    pub fn from_preset(p: MacPreset) -> Self {
        match p {
            MacPreset::Dot11 => Self::dot11(),
            MacPreset::Dot11p => Self::dot11p(),
            MacPreset::Ideal => Self::ideal(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.cw_min > self.cw_max {
            return Err(ConfigError::new("cw_min", "must not exceed cw_max"));
        }
        if self.retry_limit < 1 {
            return Err(ConfigError::new("retry_limit", "must be at least 1"));
        }
        if self.queue_capacity == 0 {
            return Err(ConfigError::new("queue_capacity", "must be at least 1"));
        }
        Ok(())
    }

    pub fn is_ideal(&self) -> bool {
        self.preset == MacPreset::Ideal
    }

    /// Seconds the medium is occupied by a frame carrying `payload_bytes`.
    pub fn airtime(&self, payload_bytes: u32, data_rate: f64) -> f64 {
        airtime(payload_bytes, self.header_overhead, data_rate)
    }

    /// Time from the end of a unicast data frame until the sender learns its
    /// fate (SIFS plus the ACK frame).
    pub fn ack_wait(&self, data_rate: f64) -> f64 {
        if self.is_ideal() {
            0.0
        } else {
            self.sifs + f64::from(self.ack_bytes) * 8.0 / data_rate
        }
    }

    pub fn backoff(&self, cw: u32, rng: &mut impl Rng) -> f64 {
        if cw == 0 {
            return 0.0;
        }
        f64::from(rng.random_range(0..=cw)) * self.slot
    }

    /// Binary exponential growth of the contention window, capped.
    pub fn next_cw(&self, cw: u32) -> u32 {
        (cw.saturating_mul(2) + 1).min(self.cw_max)
    }
}

pub fn airtime(payload_bytes: u32, header_overhead: u32, data_rate: f64) -> f64 {
    f64::from(payload_bytes + header_overhead) * 8.0 / data_rate
}

/// Drop-tail interface queue where routing control always leaves before data.
#[derive(Clone, Debug)]
pub struct PriQueue<T> {
    control: VecDeque<T>,
    data: VecDeque<T>,
    capacity: usize,
}

/// Outcome of [`PriQueue::push`].
#[derive(Debug, PartialEq)]
pub enum Enqueued<T> {
    Accepted,
    /// Queue full; the returned frame was dropped (either the newcomer or the
    /// youngest data frame it displaced).
    Dropped(T),
}

impl<T> PriQueue<T> {
    pub fn new(capacity: usize) -> Self {
        PriQueue {
            control: VecDeque::new(),
            data: VecDeque::new(),
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.control.len() + self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn push(&mut self, item: T, is_control: bool) -> Enqueued<T> {
        if self.len() < self.capacity {
            if is_control {
                self.control.push_back(item);
            } else {
                self.data.push_back(item);
            }
            return Enqueued::Accepted;
        }
        if is_control {
            if let Some(victim) = self.data.pop_back() {
                self.control.push_back(item);
                return Enqueued::Dropped(victim);
            }
        }
        Enqueued::Dropped(item)
    }

    pub fn pop(&mut self) -> Option<T> {
        self.control.pop_front().or_else(|| self.data.pop_front())
    }
}
