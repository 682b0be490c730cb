//! Constant-bit-rate datagram flows.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::sim::RngStream;
use crate::NodeId;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CbrFlow {
    pub src: NodeId,
    pub dst: NodeId,
    pub start: f64,
    pub interval: f64,
    pub payload: u32,
    pub stop: f64,
}

impl CbrFlow {
    pub fn new(src: NodeId, dst: NodeId, start: f64, stop: f64) -> Self {
        CbrFlow {
            src,
            dst,
            start,
            interval: 0.03,
            payload: 512,
            stop,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.src == self.dst {
            return Err(ConfigError::new("flows", "source and destination must differ"));
        }
        if !(self.interval > 0.0) {
            return Err(ConfigError::new("interval", "must be strictly positive"));
        }
        if self.payload == 0 {
            return Err(ConfigError::new("payload", "must be strictly positive"));
        }
        Ok(())
    }

    /// Emission time of the `k`-th packet, if it falls before `stop`.
    pub fn emission(&self, k: u64) -> Option<f64> {
        let t = self.start + k as f64 * self.interval;
        (t < self.stop).then_some(t)
    }
}

/// Window over which flow start times are staggered.
pub const START_SPREAD: f64 = 10.0;

/// Draws `count` distinct ordered `(src, dst)` pairs uniformly without
/// replacement, each starting uniformly in `[0, START_SPREAD]`.
pub fn spawn_flows(
    count: usize,
    nodes: usize,
    stop: f64,
    rng: &mut RngStream,
) -> Result<Vec<CbrFlow>, ConfigError> {
    let pairs = nodes * nodes.saturating_sub(1);
    if count > pairs {
        return Err(ConfigError::new(
            "flows",
            format!("{count} flows requested but only {pairs} ordered pairs exist among {nodes} nodes"),
        ));
    }
    let picks = index::sample(rng, pairs, count);
    Ok(picks
        .into_iter()
        .map(|k| {
            let src = k / (nodes - 1);
            let mut dst = k % (nodes - 1);
            if dst >= src {
                dst += 1;
            }
            let start = rng.random_range(0.0..=START_SPREAD);
            CbrFlow::new(NodeId(src as u32), NodeId(dst as u32), start, stop)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn distinct_pairs() {
        let mut rng = RngStream::new(1, 0);
        let flows = spawn_flows(10, 25, 900.0, &mut rng).unwrap();
        assert_eq!(flows.len(), 10);
        let pairs: BTreeSet<_> = flows.iter().map(|f| (f.src, f.dst)).collect();
        assert_eq!(pairs.len(), 10);
        for f in &flows {
            f.validate().unwrap();
            assert!(f.src.0 < 25 && f.dst.0 < 25);
            assert!((0.0..=START_SPREAD).contains(&f.start));
        }
    }

    #[test]
    fn same_seed_same_pairs() {
        let a = spawn_flows(10, 25, 900.0, &mut RngStream::new(3, 9)).unwrap();
        let b = spawn_flows(10, 25, 900.0, &mut RngStream::new(3, 9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_flows_is_fine_too_many_is_not() {
        assert!(spawn_flows(0, 25, 900.0, &mut RngStream::new(1, 0)).unwrap().is_empty());
        let err = spawn_flows(3, 2, 900.0, &mut RngStream::new(1, 0)).unwrap_err();
        assert_eq!(err.field, "flows");
        // Every ordered pair can be drawn.
        assert_eq!(spawn_flows(2, 2, 900.0, &mut RngStream::new(1, 0)).unwrap().len(), 2);
    }

    #[test]
    fn emissions_stop_at_stop_time() {
        let f = CbrFlow::new(NodeId(0), NodeId(1), 1.0, 1.1);
        assert_eq!(f.emission(0), Some(1.0));
        assert!(f.emission(3).is_some());
        assert_eq!(f.emission(4), None);
    }
}
