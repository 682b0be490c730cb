//! Node movement: random waypoint fields for MANETs, a wraparound highway
//! for VANETs, and fixed or scripted tracks for controlled experiments.

mod highway;
mod waypoint;

pub use highway::{
    spawn_vehicles, ArrivalSchedule, Boundary, Direction, Highway, HighwayConfig, LaneArrivals,
    Vehicle,
};
pub use waypoint::{RandomWaypoint, WaypointConfig, WaypointState};

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::sim::SimTime;
use crate::NodeId;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn lerp(&self, to: &Position, frac: f64) -> Position {
        Position {
            x: self.x + (to.x - self.x) * frac,
            y: self.y + (to.y - self.y) * frac,
        }
    }
}

/// Straight-line motion from `from` at `start` to `to` at `end`. A pause is a
/// leg with `from == to`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Leg {
    pub start: f64,
    pub end: f64,
    pub from: Position,
    pub to: Position,
}

impl Leg {
    pub fn at(&self, t: f64) -> Position {
        if t <= self.start || self.end <= self.start {
            return if t >= self.end { self.to } else { self.from };
        }
        if t >= self.end {
            return self.to;
        }
        self.from.lerp(&self.to, (t - self.start) / (self.end - self.start))
    }
}

/// Piecewise-linear trajectory. Before the first leg the node sits at the
/// first leg's origin; after the last leg it stays at the final point.
#[derive(Clone, Debug, PartialEq)]
pub struct Track {
    legs: Vec<Leg>,
}

impl Track {
    pub fn stationary(at: Position) -> Self {
        Track {
            legs: vec![Leg {
                start: 0.0,
                end: 0.0,
                from: at,
                to: at,
            }],
        }
    }

    /// Builds a track through timed waypoints `(t, position)`; times must be
    /// non-decreasing. The node holds its first position until the first time.
    pub fn through(points: &[(f64, Position)]) -> Self {
        assert!(!points.is_empty(), "a track needs at least one point");
        let mut legs = vec![Leg {
            start: 0.0,
            end: points[0].0,
            from: points[0].1,
            to: points[0].1,
        }];
        for w in points.windows(2) {
            assert!(w[1].0 >= w[0].0, "track times must be non-decreasing");
            legs.push(Leg {
                start: w[0].0,
                end: w[1].0,
                from: w[0].1,
                to: w[1].1,
            });
        }
        Track { legs }
    }

    pub(crate) fn from_legs(legs: Vec<Leg>) -> Self {
        assert!(!legs.is_empty());
        Track { legs }
    }

    pub fn legs(&self) -> &[Leg] {
        &self.legs
    }

    pub fn position_at(&self, t: f64) -> Position {
        // Last leg starting at or before t.
        let idx = self.legs.partition_point(|l| l.start <= t);
        match idx {
            0 => self.legs[0].from,
            i => self.legs[i - 1].at(t),
        }
    }
}

/// The spatial process of a whole scenario.
#[derive(Clone, Debug)]
pub enum Mobility {
    Tracks(Vec<Track>),
    Highway(Highway),
}

impl Mobility {
    pub fn stationary(positions: &[Position]) -> Self {
        Mobility::Tracks(positions.iter().copied().map(Track::stationary).collect())
    }

    pub fn node_count(&self) -> usize {
        match self {
            Mobility::Tracks(t) => t.len(),
            Mobility::Highway(h) => h.vehicles().len(),
        }
    }

    pub fn position_at(&self, node: NodeId, t: SimTime) -> Result<Position, SimError> {
        let i = node.index();
        match self {
            Mobility::Tracks(tracks) => tracks
                .get(i)
                .map(|tr| tr.position_at(t.as_secs()))
                .ok_or(SimError::UnknownNode(node.0)),
            Mobility::Highway(h) => h.position_at(i, t.as_secs()).ok_or(SimError::UnknownNode(node.0)),
        }
    }

    pub fn positions_at(&self, t: SimTime) -> Vec<Position> {
        (0..self.node_count())
            .map(|i| self.position_at(NodeId(i as u32), t).expect("index in range"))
            .collect()
    }

    /// Every other node within Euclidean distance `range` (closed ball), in
    /// ascending id order.
    pub fn neighbors_within(
        &self,
        node: NodeId,
        range: f64,
        t: SimTime,
    ) -> Result<Vec<NodeId>, SimError> {
        let me = self.position_at(node, t)?;
        Ok((0..self.node_count() as u32)
            .map(NodeId)
            .filter(|&other| other != node)
            .filter(|&other| {
                let p = self.position_at(other, t).expect("index in range");
                me.distance(&p) <= range
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: f64) -> SimTime {
        SimTime::from_secs(s)
    }

    #[test]
    fn linear_leg_interpolates() {
        let tr = Track::through(&[(0.0, Position::new(0.0, 0.0)), (10.0, Position::new(100.0, 0.0))]);
        assert_eq!(tr.position_at(0.0), Position::new(0.0, 0.0));
        assert_eq!(tr.position_at(5.0), Position::new(50.0, 0.0));
        assert_eq!(tr.position_at(50.0), Position::new(100.0, 0.0));
    }

    #[test]
    fn unknown_node_is_an_error() {
        let m = Mobility::stationary(&[Position::new(0.0, 0.0)]);
        assert_eq!(m.position_at(NodeId(3), t(0.0)), Err(SimError::UnknownNode(3)));
    }

    #[test]
    fn neighbor_range_is_a_closed_ball() {
        let m = Mobility::stationary(&[
            Position::new(0.0, 0.0),
            Position::new(100.0, 0.0),
            Position::new(400.0, 0.0),
            Position::new(0.0, 250.0),
        ]);
        assert_eq!(m.neighbors_within(NodeId(0), 250.0, t(0.0)).unwrap(), vec![NodeId(1), NodeId(3)]);
        assert_eq!(m.neighbors_within(NodeId(1), 250.0, t(0.0)).unwrap(), vec![NodeId(0)]);
        assert!(m.neighbors_within(NodeId(2), 250.0, t(0.0)).unwrap().is_empty());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn neighbors_symmetric_and_irreflexive(
                pts in prop::collection::vec((0.0f64..1000.0, 0.0f64..1000.0), 2..30),
                range in 1.0f64..600.0,
            ) {
                let pos: Vec<_> = pts.iter().map(|&(x, y)| Position::new(x, y)).collect();
                let m = Mobility::stationary(&pos);
                let n = pos.len() as u32;
                for a in 0..n {
                    let na = m.neighbors_within(NodeId(a), range, t(0.0)).unwrap();
                    prop_assert!(!na.contains(&NodeId(a)));
                    for b in na {
                        let nb = m.neighbors_within(b, range, t(0.0)).unwrap();
                        prop_assert!(nb.contains(&NodeId(a)));
                    }
                }
            }
        }
    }
}
