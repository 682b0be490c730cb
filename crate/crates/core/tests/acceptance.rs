//! One pass/fail line per acceptance criterion. Criteria 1 to 9 are hard and
//! fail the target; criterion 10 is reported but never fails it.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use adhocsim::analytics::{
    link_duration, pgf, poisson_pmf, validate_occupancy, FitStatus, Heading, KinematicPair, LinkDuration,
    OccupancyExperiment,
};
use adhocsim::metrics;
use adhocsim::mobility::Position;
use adhocsim::net::{Network, RoutingProtocol};
use adhocsim::output::write_results;
use adhocsim::radio::MacPreset;
use adhocsim::routing::aodv::{Aodv, AodvConfig};
use adhocsim::routing::dsr::{Dsr, DsrConfig, RouteCache};
use adhocsim::routing::fsr::{Fsr, FsrConfig};
use adhocsim::routing::ProtocolKind;
use adhocsim::scenario::{run_scenario, ResultRow, ScenarioConfig};
use adhocsim::sim::SimTime;
use adhocsim::sweep::{run_configs, run_sweep, SweepSpec};
use adhocsim::traffic::CbrFlow;
use adhocsim::NodeId;
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

/// Number, title, check, and whether a failure fails the target.
type Criterion = (u32, &'static str, fn() -> Outcome, bool);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

const PHIS: [f64; 6] = [0.1, 1.0, 2.0, 5.0, 10.0, 30.0];

fn poisson_suite() -> Outcome {
    let mut worst_sum = 0.0f64;
    let mut worst_series = 0.0f64;
    let mut worst_slope = 0.0f64;
    let mut pgf_at_one = true;
    for phi in PHIS {
        let pmf: Vec<f64> = (0..400).map(|n| poisson_pmf(phi, n).unwrap()).collect();
        worst_sum = worst_sum.max((pmf.iter().sum::<f64>() - 1.0).abs());
        pgf_at_one &= pgf(phi, 1.0).unwrap() == 1.0;
        for z in [0.0f64, 0.25, 0.5, 0.9, 1.0] {
            let series: f64 = pmf.iter().enumerate().map(|(n, p)| z.powi(n as i32) * p).sum();
            worst_series = worst_series.max((series - pgf(phi, z).unwrap()).abs());
        }
        // z is capped at 1, so a second-order one-sided difference
        let h = 3e-6;
        let g = |z: f64| pgf(phi, z).unwrap();
        let slope = (3.0 * g(1.0) - 4.0 * g(1.0 - h) + g(1.0 - 2.0 * h)) / (2.0 * h);
        worst_slope = worst_slope.max((slope - phi).abs());
    }
    check(
        worst_sum <= 1e-9 && pgf_at_one && worst_series <= 1e-9 && worst_slope <= 1e-6,
        format!(
            "|sum pmf - 1| {worst_sum:.1e}, pgf(phi,1) == 1: {pgf_at_one}, |pgf - series| {worst_series:.1e}, |G'(1) - phi| {worst_slope:.1e}"
        ),
    )
}

fn occupancy() -> Outcome {
    let exp = OccupancyExperiment::default();
    let phi = exp.phi().unwrap();
    let poisson = validate_occupancy(&exp.poisson_counts().unwrap(), phi).unwrap();
    let convoy = validate_occupancy(&exp.convoy_counts().unwrap(), phi).unwrap();
    let mean_ok = (poisson.mean - 2.0).abs() <= 0.02 * 2.0;
    let disp_ok = (0.9..=1.1).contains(&poisson.dispersion);
    check(
        phi == 2.0
            && poisson.samples >= 100_000
            && mean_ok
            && disp_ok
            && poisson.status == FitStatus::Pass
            && convoy.status == FitStatus::Fail,
        format!(
            "phi {phi}, {} samples, mean {:.4}, var/mean {:.4}, {:?}; convoy var/mean {:.4}, {:?}",
            poisson.samples, poisson.mean, poisson.dispersion, poisson.status, convoy.dispersion, convoy.status
        ),
    )
}

/// Steps two vehicles on a line at 1 ms and measures how long they stay
/// within `range`, starting just outside it. `None` if still linked at the
/// horizon.
fn stepped_duration(v1: f64, v2: f64, heading: Heading, range: f64) -> Option<f64> {
    let dt = 1e-3;
    let (mut x1, mut x2, u2) = match heading {
        Heading::Same if v2 > v1 => (0.0, -(range + 1.0), v2),
        Heading::Same => (0.0, range + 1.0, v2),
        Heading::Opposite => (0.0, range + 1.0, -v2),
    };
    let mut first = None;
    let horizon = 2_000_000u64;
    for step in 0..horizon {
        let linked = (x1 - x2).abs() <= range;
        match (linked, first) {
            (true, None) => first = Some(step),
            (false, Some(s)) => return Some((step - s) as f64 * dt),
            _ => {}
        }
        x1 += v1 * dt;
        x2 += u2 * dt;
    }
    None
}

fn link_durations() -> Outcome {
    let speeds = [2.0, 7.0, 15.0, 30.0];
    let mut worst = 0.0f64;
    let mut mismatched = vec![];
    for heading in [Heading::Same, Heading::Opposite] {
        for v1 in speeds {
            for v2 in speeds {
                let closed = link_duration(KinematicPair {
                    v1,
                    v2,
                    heading,
                    range: 250.0,
                })
                .unwrap();
                let stepped = stepped_duration(v1, v2, heading, 250.0);
                match (closed, stepped) {
                    (LinkDuration::Finite(c), Some(s)) => {
                        let rel = (c - s).abs() / c;
                        worst = worst.max(rel);
                        if rel > 1e-3 {
                            mismatched.push(format!("{heading:?} {v1}/{v2}"));
                        }
                    }
                    (LinkDuration::Unbounded, None) if heading == Heading::Same && v1 == v2 => {}
                    _ => mismatched.push(format!("{heading:?} {v1}/{v2}")),
                }
            }
        }
    }
    check(
        mismatched.is_empty(),
        format!("32 pairs, worst relative error {worst:.1e}, equal same-direction speeds unbounded; mismatches {mismatched:?}"),
    )
}

fn ring_ttls(cfg: AodvConfig) -> Vec<u32> {
    let pos = chain(11, 200.0);
    let agents = ids(11).map(|i| Aodv::new(i, cfg)).collect();
    let mut net = static_net(&pos, agents, 1);
    net.add_flow(CbrFlow::new(NodeId(0), NodeId(10), 1.0, 1.2));
    net.run_until(20.0);
    net.agent(NodeId(0))
        .originated()
        .iter()
        .filter(|r| r.dest == NodeId(10) && !r.repair)
        .map(|r| r.ttl)
        .collect()
}

fn ers_sequences() -> Outcome {
    let default = ring_ttls(AodvConfig::default());
    let modified = ring_ttls(AodvConfig::modified());
    check(
        default == [1, 3, 5, 7, 35] && modified == [2, 6, 35],
        format!("10-hop chain: default rings {default:?}, MOD rings {modified:?}"),
    )
}

fn cache_bound() -> Outcome {
    let fill = |capacity: usize| {
        let mut c = RouteCache::new(NodeId(0), capacity);
        for k in 1..=300u32 {
            c.insert(vec![NodeId(0), NodeId(k)], SimTime::from_secs(f64::from(k))).unwrap();
        }
        c
    };
    let m = fill(DsrConfig::modified().cache_capacity);
    let evicted: Vec<u32> = (1..=300u32).filter(|&k| !m.contains(&[NodeId(0), NodeId(k)])).collect();
    let d = fill(DsrConfig::default().cache_capacity);
    check(
        m.len() == 256 && evicted == (1..=44).collect::<Vec<_>>() && d.len() == 300 && d.capacity() == 1024,
        format!(
            "MOD holds {} (evicted {} oldest: {}), default holds {} of {}",
            m.len(),
            evicted.len(),
            evicted == (1..=44).collect::<Vec<_>>(),
            d.len(),
            d.capacity()
        ),
    )
}

fn fsr_timing() -> Outcome {
    let pos = chain(5, 200.0);
    let agents = ids(5).map(|i| Fsr::new(i, FsrConfig::modified())).collect();
    let mut net = static_net(&pos, agents, 1);
    net.run_until(90.0);
    let counts: Vec<(u64, u64)> = net.agents().iter().map(|a| (a.broadcasts(), a.full_broadcasts())).collect();
    let ok = counts.iter().all(|&(b, f)| b.abs_diff(90) <= 1 && f.abs_diff(30) <= 1);
    check(ok, format!("(broadcasts, full) per node over 90 s: {counts:?}"))
}

/// Runs one flow over a static topology and reports (sent, delivered, hop
/// counts seen).
fn static_flow<P: RoutingProtocol>(mut net: Network<P>, flow: CbrFlow, until: f64) -> (u64, u64, Vec<u32>) {
    net.add_flow(flow);
    net.run_until(until);
    let l = net.into_ledger();
    (l.data_sent, l.data_delivered, l.latency.iter().map(|r| r.hops).collect())
}

fn static_oracle() -> Outcome {
    let mut failures: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
    let mut packets = 0;
    for seed in 1..=20u64 {
        let pos = connected_topology(25, 800.0, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = rng.random_range(0..25usize);
        let dst = (src + rng.random_range(1..25usize)) % 25;
        let want = bfs(&pos, src)[dst].unwrap();
        let (s, d) = (NodeId(src as u32), NodeId(dst as u32));
        let settle = 2.0 * FsrConfig::default().outer_interval * f64::from(diameter(&pos));
        let runs = [
            (
                "aodv",
                static_flow(
                    static_net(&pos, ids(25).map(|i| Aodv::new(i, AodvConfig::default())).collect(), seed),
                    CbrFlow::new(s, d, 1.0, 4.0),
                    10.0,
                ),
            ),
            (
                "dsr",
                static_flow(
                    static_net(&pos, ids(25).map(|i| Dsr::new(i, DsrConfig::default())).collect(), seed),
                    CbrFlow::new(s, d, 1.0, 4.0),
                    10.0,
                ),
            ),
            (
                "fsr",
                static_flow(
                    static_net(&pos, ids(25).map(|i| Fsr::new(i, FsrConfig::default())).collect(), seed),
                    CbrFlow::new(s, d, settle, settle + 3.0),
                    settle + 10.0,
                ),
            ),
        ];
        for (name, (sent, delivered, hops)) in runs {
            packets += sent;
            if sent == 0 || delivered != sent || hops.iter().any(|&h| h != want) {
                failures.entry(name).or_default().push(seed);
            }
        }
    }
    check(
        failures.is_empty(),
        format!("20 topologies x 3 protocols, {packets} packets; topologies off the BFS oracle: {failures:?}"),
    )
}

fn nrl_hand_count() -> Outcome {
    // A-B-C in a line, D and E off A on a perpendicular line.
    let pos = [
        Position::new(0.0, 0.0),
        Position::new(200.0, 0.0),
        Position::new(400.0, 0.0),
        Position::new(0.0, 200.0),
        Position::new(0.0, 400.0),
    ];
    let cfg = AodvConfig {
        hello_enabled: false,
        ..AodvConfig::default()
    };
    let mut net = static_net(&pos, ids(5).map(|i| Aodv::new(i, cfg)).collect(), 1);
    net.add_flow(CbrFlow::new(NodeId(0), NodeId(2), 1.0, 1.0 + 10.0 * 0.03 - 0.015));
    net.run_until(10.0);
    let l = net.into_ledger();
    let nrl = metrics::nrl(&l);
    check(
        nrl == Some(0.7),
        format!(
            "{} delivered, control {:?}, NRL {nrl:?}",
            l.data_delivered, l.control_by_kind
        ),
    )
}

fn csv_of(rows: &[ResultRow]) -> Vec<u8> {
    let mut buf = vec![];
    write_results(&mut buf, rows).unwrap();
    buf
}

fn determinism() -> Outcome {
    let mut same_rows = true;
    for protocol in [ProtocolKind::Aodv, ProtocolKind::Dsr, ProtocolKind::Fsr] {
        let cfg = ScenarioConfig {
            protocol,
            nodes: 20,
            sim_time: 80.0,
            flows: 5,
            seed: 9,
            ..Default::default()
        };
        let a = run_scenario(&cfg).unwrap();
        let b = run_scenario(&cfg).unwrap();
        same_rows &= csv_of(&[a.row]) == csv_of(&[b.row]) && a.trace_digest == b.trace_digest;
    }
    let spec = SweepSpec::parse(
        "protocol = aodv, mod-fsr\nmac = 80211, 80211p\nnodes = 12\nspeed = 5\nsim_time = 70\nflows = 3\nreps = 2\n",
    )
    .unwrap();
    let one = run_sweep(&spec, 1).unwrap();
    let two = run_sweep(&spec, 2).unwrap();
    let same_sweep = csv_of(&one.rows) == csv_of(&two.rows) && one.summary == two.summary;
    check(
        same_rows && same_sweep,
        format!(
            "repeat runs byte-identical: {same_rows}; {}-row sweep identical on 1 and 2 workers: {same_sweep}",
            one.rows.len()
        ),
    )
}

/// Per-seed majority votes on three orderings, over 200 s runs.
fn qualitative_orderings() -> Outcome {
    const SEEDS: u64 = 5;
    let cells = [
        (MacPreset::Dot11, 25usize, 2.0f64),
        (MacPreset::Dot11, 100, 30.0),
        (MacPreset::Dot11p, 25, 2.0),
        (MacPreset::Dot11p, 100, 30.0),
    ];
    let mut wanted: Vec<ScenarioConfig> = vec![];
    let mut add = |protocol, mac, nodes, speed| {
        for seed in 1..=SEEDS {
            let c = ScenarioConfig {
                protocol,
                mac,
                nodes,
                speed,
                seed,
                sim_time: 200.0,
                ..Default::default()
            };
            if !wanted.contains(&c) {
                wanted.push(c);
            }
        }
    };
    use ProtocolKind::*;
    for (mac, n, v) in cells {
        for p in [Aodv, ModAodv, Fsr, ModFsr] {
            add(p, mac, n, v);
        }
    }
    for p in [Aodv, ModAodv, Dsr, ModDsr, Fsr, ModFsr] {
        add(p, MacPreset::Dot11p, 100, 30.0);
        add(p, MacPreset::Dot11, 25, 2.0);
    }
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let rows = run_configs(&wanted, workers).unwrap();
    let get = |p: ProtocolKind, mac: MacPreset, n: usize, v: f64, seed: u64| {
        rows.iter()
            .find(|r| r.protocol == p && r.mac == mac && r.nodes == n && r.speed_mps == v && r.seed == seed)
            .expect("row was run")
    };
    let family_mean = |ps: [ProtocolKind; 2], f: &dyn Fn(&ResultRow) -> Option<f64>, mac, n, v, seed| {
        let xs: Vec<f64> = ps.iter().filter_map(|&p| f(get(p, mac, n, v, seed))).collect();
        (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
    };

    let mut votes = vec![];
    for (mac, n, v) in cells {
        let wins = (1..=SEEDS)
            .filter(|&s| {
                let e = |r: &ResultRow| r.e2ed_ms;
                match (family_mean([Fsr, ModFsr], &e, mac, n, v, s), family_mean([Aodv, ModAodv], &e, mac, n, v, s)) {
                    (Some(f), Some(a)) => f < a,
                    _ => false,
                }
            })
            .count();
        votes.push((format!("E2ED FSR<AODV {}/n{n}/v{v}", mac.name()), wins));
    }
    let argbest = |mac, n, v, seed, highest: bool| {
        let all = [Aodv, ModAodv, Dsr, ModDsr, Fsr, ModFsr];
        let mut scored: Vec<(f64, ProtocolKind)> = all
            .iter()
            .map(|&p| (get(p, mac, n, v, seed).nrl.unwrap_or(f64::INFINITY), p))
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0));
        if highest {
            scored.retain(|s| s.0.is_finite());
            scored.last().map(|s| s.1)
        } else {
            scored.first().map(|s| s.1)
        }
    };
    let aodv_top = (1..=SEEDS)
        .filter(|&s| argbest(MacPreset::Dot11p, 100, 30.0, s, true) == Some(Aodv))
        .count();
    votes.push(("NRL highest is AODV 80211p/n100/v30".into(), aodv_top));
    let dsr_low = (1..=SEEDS)
        .filter(|&s| argbest(MacPreset::Dot11, 25, 2.0, s, false) == Some(Dsr))
        .count();
    votes.push(("NRL lowest is DSR 80211/n25/v2".into(), dsr_low));

    let majority = SEEDS as usize / 2 + 1;
    let held = votes.iter().filter(|(_, w)| *w >= majority).count();
    let detail = votes
        .iter()
        .map(|(name, w)| format!("{name} {w}/{SEEDS}"))
        .collect::<Vec<_>>()
        .join("; ");
    check(held == votes.len(), format!("{} runs; {detail}", wanted.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "Poisson pmf and pgf identities", poisson_suite, true),
        (2, "highway occupancy matches Poisson, convoy rejected", occupancy, true),
        (3, "link duration against 1 ms kinematic stepping", link_durations, true),
        (4, "expanding ring TTL sequences", ers_sequences, true),
        (5, "route cache bound and LRU eviction", cache_bound, true),
        (6, "FSR inner and outer update counts", fsr_timing, true),
        (7, "static topologies: full delivery on BFS hop counts", static_oracle, true),
        (8, "scripted 5-node NRL equals 0.7", nrl_hand_count, true),
        (9, "determinism across reruns and worker counts", determinism, true),
        (10, "qualitative orderings (soft)", qualitative_orderings, false),
    ];
    let mut hard_failures = 0;
    for (n, name, f, hard) in criteria {
        let t = Instant::now();
        let (verdict, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) if hard => {
                hard_failures += 1;
                ("FAIL", d)
            }
            Err(d) => ("SOFT-FAIL", d),
        };
        println!("criterion {n:>2} {verdict:<9} {name} [{:.1?}]: {detail}", t.elapsed());
    }
    if hard_failures > 0 {
        eprintln!("{hard_failures} hard criteria failed");
        std::process::exit(1);
    }
}
