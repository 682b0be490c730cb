//! Counters behind throughput, end-to-end delay and normalised routing load.
//!
//! A packet is *measured* when the application emits it at or after the
//! warm-up instant; only measured packets enter the data counters. Control
//! transmissions are counted when they go on air at or after warm-up.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::sim::SimTime;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyRecord {
    pub packet: u64,
    pub flow: u32,
    pub sent_at: f64,
    pub delivered_at: f64,
    pub hops: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
struct Live {
    sent_at: f64,
    measured: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsLedger {
    pub warmup: f64,
    pub data_sent: u64,
    pub data_delivered: u64,
    pub delivered_bytes: u64,
    pub data_dropped: u64,
    pub control_tx: u64,
    pub control_by_kind: BTreeMap<String, u64>,
    pub drops_by_reason: BTreeMap<String, u64>,
    pub latency: Vec<LatencyRecord>,
    live: BTreeMap<u64, Live>,
}

impl MetricsLedger {
    pub fn new(warmup: f64) -> Self {
        MetricsLedger {
            warmup,
            ..Default::default()
        }
    }

    pub fn record_sent(&mut self, packet: u64, at: SimTime) {
        let measured = at.as_secs() >= self.warmup;
        self.live.insert(
            packet,
            Live {
                sent_at: at.as_secs(),
                measured,
            },
        );
        if measured {
            self.data_sent += 1;
        }
    }

    /// Returns `false` for a packet that was already delivered or dropped,
    /// which is then ignored.
    pub fn record_delivery(&mut self, packet: u64, flow: u32, at: SimTime, hops: u32, bytes: u32) -> bool {
        let Some(live) = self.live.remove(&packet) else {
            return false;
        };
        if live.measured {
            self.data_delivered += 1;
            self.delivered_bytes += u64::from(bytes);
            self.latency.push(LatencyRecord {
                packet,
                flow,
                sent_at: live.sent_at,
                delivered_at: at.as_secs(),
                hops,
            });
        }
        true
    }

    pub fn record_drop(&mut self, packet: u64, reason: &str) -> bool {
        let Some(live) = self.live.remove(&packet) else {
            return false;
        };
        if live.measured {
            self.data_dropped += 1;
            *self.drops_by_reason.entry(reason.to_string()).or_default() += 1;
        }
        true
    }

    pub fn record_control(&mut self, kind: &str, at: SimTime) {
        if at.as_secs() >= self.warmup {
            self.control_tx += 1;
            *self.control_by_kind.entry(kind.to_string()).or_default() += 1;
        }
    }

    /// Measured packets neither delivered nor dropped yet.
    pub fn in_flight(&self) -> u64 {
        self.live.values().filter(|l| l.measured).count() as u64
    }

    pub fn control_of(&self, kind: &str) -> u64 {
        self.control_by_kind.get(kind).copied().unwrap_or(0)
    }
}

/// Delivered application bits per second.
pub fn throughput(ledger: &MetricsLedger, duration: f64) -> f64 {
    assert!(duration > 0.0, "throughput needs a positive duration");
    ledger.delivered_bytes as f64 * 8.0 / duration
}

/// Mean end-to-end delay of delivered packets in milliseconds, including any
/// time spent buffered awaiting a route. `None` without deliveries.
pub fn e2ed(ledger: &MetricsLedger) -> Option<f64> {
    if ledger.latency.is_empty() {
        return None;
    }
    let total: f64 = ledger.latency.iter().map(|r| r.delivered_at - r.sent_at).sum();
    Some(total / ledger.latency.len() as f64 * 1000.0)
}

/// Routing-control transmissions per delivered data packet.
pub fn nrl(ledger: &MetricsLedger) -> Option<f64> {
    (ledger.data_delivered > 0).then(|| ledger.control_tx as f64 / ledger.data_delivered as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn t(s: f64) -> SimTime {
        SimTime::from_secs(s)
    }

    fn deliver_all(l: &mut MetricsLedger, delays: &[(f64, f64)]) {
        for (i, &(s, d)) in delays.iter().enumerate() {
            l.record_sent(i as u64, t(s));
            l.record_delivery(i as u64, 0, t(d), 1, 512);
        }
    }

    #[test]
    fn throughput_definition() {
        let mut l = MetricsLedger::new(0.0);
        deliver_all(&mut l, &vec![(0.0, 0.1); 100]);
        assert_abs_diff_eq!(throughput(&l, 10.0), 40_960.0);
        assert_eq!(throughput(&MetricsLedger::new(0.0), 10.0), 0.0);
    }

    #[test]
    fn e2ed_is_mean_delay_in_ms() {
        let mut l = MetricsLedger::new(0.0);
        deliver_all(&mut l, &[(1.0, 1.05)]);
        assert_abs_diff_eq!(e2ed(&l).unwrap(), 50.0, epsilon = 1e-9);

        let mut l = MetricsLedger::new(0.0);
        deliver_all(&mut l, &[(0.0, 0.010), (1.0, 1.030)]);
        assert_abs_diff_eq!(e2ed(&l).unwrap(), 20.0, epsilon = 1e-9);

        // Buffered for 200 ms awaiting a route, then 5 ms in transit.
        let mut l = MetricsLedger::new(0.0);
        deliver_all(&mut l, &[(2.0, 2.205)]);
        assert_abs_diff_eq!(e2ed(&l).unwrap(), 205.0, epsilon = 1e-9);

        assert_eq!(e2ed(&MetricsLedger::new(0.0)), None);
    }

    #[test]
    fn nrl_ratio_and_guard() {
        let mut l = MetricsLedger::new(0.0);
        deliver_all(&mut l, &vec![(0.0, 0.1); 1000]);
        for _ in 0..500 {
            l.record_control("rreq", t(0.0));
        }
        assert_abs_diff_eq!(nrl(&l).unwrap(), 0.5);
        let mut idle = MetricsLedger::new(0.0);
        idle.record_control("fsr-update", t(1.0));
        assert_eq!(nrl(&idle), None);
    }

    #[test]
    fn duplicates_not_double_counted() {
        let mut l = MetricsLedger::new(0.0);
        l.record_sent(7, t(0.0));
        assert!(l.record_delivery(7, 0, t(0.1), 2, 512));
        assert!(!l.record_delivery(7, 0, t(0.2), 3, 512));
        assert!(!l.record_drop(7, "late"));
        assert_eq!(l.data_delivered, 1);
        assert_eq!(l.data_dropped, 0);
    }

    #[test]
    fn warmup_excludes_early_traffic() {
        let mut l = MetricsLedger::new(50.0);
        l.record_sent(1, t(49.0));
        l.record_sent(2, t(51.0));
        l.record_delivery(1, 0, t(50.5), 1, 512);
        l.record_delivery(2, 0, t(51.5), 1, 512);
        l.record_control("hello", t(10.0));
        l.record_control("hello", t(60.0));
        assert_eq!((l.data_sent, l.data_delivered, l.control_tx), (1, 1, 1));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn conservation(ops in prop::collection::vec((0u64..40, 0u8..3), 0..200)) {
                let mut l = MetricsLedger::new(0.0);
                let mut next = 0u64;
                for (pick, op) in ops {
                    match op {
                        0 => { l.record_sent(next, t(0.0)); next += 1; }
                        1 => { l.record_delivery(pick, 0, t(1.0), 1, 512); }
                        _ => { l.record_drop(pick, "x"); }
                    }
                }
                prop_assert!(l.data_delivered <= l.data_sent);
                prop_assert_eq!(l.data_delivered + l.data_dropped + l.in_flight(), l.data_sent);
            }
        }
    }
}
