use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Leg, Position, Track};
use crate::error::ConfigError;
use crate::sim::{streams, RngStream};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaypointConfig {
    pub width: f64,
    pub height: f64,
    /// Constant for the whole scenario.
    pub speed: f64,
    pub pause: f64,
}

impl Default for WaypointConfig {
    fn default() -> Self {
        WaypointConfig {
            width: 1000.0,
            height: 1000.0,
            speed: 2.0,
            pause: 0.0,
        }
    }
}

impl WaypointConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return Err(ConfigError::new("speed", "must be strictly positive"));
        }
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(ConfigError::new("field", "width and height must be positive"));
        }
        if !(self.pause >= 0.0) {
            return Err(ConfigError::new("pause_time", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaypointState {
    pub current: Position,
    pub destination: Position,
    pub speed: f64,
    pub pause_remaining: f64,
}

/// Random waypoint generator for one node.
#[derive(Clone, Debug)]
pub struct RandomWaypoint {
    cfg: WaypointConfig,
    state: WaypointState,
    clock: f64,
    rng: RngStream,
}

impl RandomWaypoint {
    pub fn new(cfg: WaypointConfig, master_seed: u64, node: u32) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let mut rng = RngStream::new(master_seed, streams::MOBILITY + u64::from(node));
        let current = uniform_point(&cfg, &mut rng);
        let destination = uniform_point(&cfg, &mut rng);
        Ok(RandomWaypoint {
            cfg,
            state: WaypointState {
                current,
                destination,
                speed: cfg.speed,
                pause_remaining: 0.0,
            },
            clock: 0.0,
            rng,
        })
    }

    pub fn state(&self) -> &WaypointState {
        &self.state
    }

    /// Produces the leg that carries the node from its current position to
    /// its destination, then draws the next destination. A non-zero pause is
    /// folded into the following leg's start time.
    pub fn advance(&mut self) -> Leg {
        let start = self.clock + self.state.pause_remaining;
        let travel = self.state.current.distance(&self.state.destination) / self.state.speed;
        let leg = Leg {
            start,
            end: start + travel,
            from: self.state.current,
            to: self.state.destination,
        };
        self.clock = leg.end;
        self.state.current = self.state.destination;
        self.state.destination = uniform_point(&self.cfg, &mut self.rng);
        self.state.pause_remaining = self.cfg.pause;
        leg
    }

    /// Generates legs until the track covers `horizon` seconds.
    pub fn track(mut self, horizon: f64) -> Track {
        let mut legs = vec![];
        loop {
            let pause_from = self.clock;
            let leg = self.advance();
            if leg.start > pause_from {
                legs.push(Leg {
                    start: pause_from,
                    end: leg.start,
                    from: leg.from,
                    to: leg.from,
                });
            }
            legs.push(leg);
            if leg.end >= horizon {
                break;
            }
        }
        Track::from_legs(legs)
    }
}

fn uniform_point(cfg: &WaypointConfig, rng: &mut RngStream) -> Position {
    Position {
        x: rng.random_range(0.0..=cfg.width),
        y: rng.random_range(0.0..=cfg.height),
    }
}
