//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::VecDeque;

use adhocsim::mobility::{Mobility, Position, Track};
use adhocsim::net::{NetConfig, Network, RoutingProtocol};
use adhocsim::radio::{ChannelModel, MacConfig};
use adhocsim::NodeId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const RANGE: f64 = 250.0;

/// Static nodes, unit-disk channel of radius [`RANGE`], ideal MAC.
pub fn static_net<P: RoutingProtocol>(positions: &[Position], agents: Vec<P>, seed: u64) -> Network<P> {
    Network::new(
        NetConfig {
            channel: ChannelModel::unit_disk(RANGE),
            mac: MacConfig::ideal(),
            warmup: 0.0,
            seed,
        },
        Mobility::stationary(positions),
        agents,
    )
}

pub fn chain(n: usize, spacing: f64) -> Vec<Position> {
    (0..n).map(|i| Position::new(i as f64 * spacing, 0.0)).collect()
}

/// Hop distances from `src` over the unit-disk graph; `None` if unreachable.
pub fn bfs(positions: &[Position], src: usize) -> Vec<Option<u32>> {
    let mut dist = vec![None; positions.len()];
    dist[src] = Some(0);
    let mut q = VecDeque::from([src]);
    while let Some(u) = q.pop_front() {
        let du = dist[u].unwrap();
        for v in 0..positions.len() {
            if dist[v].is_none() && positions[u].distance(&positions[v]) <= RANGE {
                dist[v] = Some(du + 1);
                q.push_back(v);
            }
        }
    }
    dist
}

pub fn diameter(positions: &[Position]) -> u32 {
    (0..positions.len())
        .flat_map(|s| bfs(positions, s))
        .map(|d| d.expect("connected"))
        .max()
        .unwrap_or(0)
}

/// `n` uniform points in a `side` x `side` square, redrawn until the
/// unit-disk graph is connected.
pub fn connected_topology(n: usize, side: f64, seed: u64) -> Vec<Position> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let pts: Vec<Position> = (0..n)
            .map(|_| Position::new(rng.random_range(0.0..side), rng.random_range(0.0..side)))
            .collect();
        if bfs(&pts, 0).iter().all(Option::is_some) {
            return pts;
        }
    }
}

pub fn ids(n: usize) -> impl Iterator<Item = NodeId> {
    (0..n as u32).map(NodeId)
}

/// Like [`static_net`] but with explicit trajectories.
pub fn moving_net<P: RoutingProtocol>(tracks: Vec<Track>, agents: Vec<P>, seed: u64) -> Network<P> {
    Network::new(
        NetConfig {
            channel: ChannelModel::unit_disk(RANGE),
            mac: MacConfig::ideal(),
            warmup: 0.0,
            seed,
        },
        Mobility::Tracks(tracks),
        agents,
    )
}

/// Chain 0-1-2-3-4 at 200 m spacing plus a bystander 5 at (700, 150).
/// At t = 5 s node 4 steps to (800, 200): out of range of 3, still in range
/// of 5, so the route must bend through 5.
pub fn detour_tracks() -> Vec<Track> {
    let mut tracks: Vec<Track> = chain(4, 200.0).into_iter().map(Track::stationary).collect();
    tracks.push(Track::through(&[(5.0, Position::new(800.0, 0.0)), (5.1, Position::new(800.0, 200.0))]));
    tracks.push(Track::stationary(Position::new(700.0, 150.0)));
    tracks
}
