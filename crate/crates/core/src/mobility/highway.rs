//! Straight multi-lane highway.
//!
//! Two views of the same road:
//!
//! * [`Highway`] is a fixed population of vehicles on a wraparound road,
//!   used by network scenarios. Initial positions are uniform, which is the
//!   stationary Poisson configuration conditioned on the vehicle count.
//! * [`spawn_vehicles`] produces per-lane Poisson arrival schedules on an open
//!   road, used to study segment occupancy.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::Position;
use crate::error::ConfigError;
use crate::sim::{streams, RngStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Reverse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    /// Vehicles leaving one end re-enter at the other; population is fixed.
    Wraparound,
    /// Vehicles enter at one end by Poisson arrival and leave at the other.
    Open,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HighwayConfig {
    pub road_length: f64,
    pub lanes_per_direction: u32,
    pub lane_width: f64,
    /// Vehicles per second per lane.
    pub arrival_rate: f64,
    pub speed: f64,
    /// Per-vehicle speed is drawn uniformly from `speed ± speed_jitter`.
    pub speed_jitter: f64,
    pub boundary: Boundary,
}

impl Default for HighwayConfig {
    fn default() -> Self {
        HighwayConfig {
            road_length: 1000.0,
            lanes_per_direction: 2,
            lane_width: 5.0,
            arrival_rate: 0.1,
            speed: 20.0,
            speed_jitter: 0.0,
            boundary: Boundary::Wraparound,
        }
    }
}

impl HighwayConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.road_length > 0.0) {
            return Err(ConfigError::new("road_length", "must be strictly positive"));
        }
        if !(self.arrival_rate > 0.0) {
            return Err(ConfigError::new("arrival_rate", "must be strictly positive"));
        }
        if !(self.speed > 0.0) {
            return Err(ConfigError::new("speed", "must be strictly positive"));
        }
        if !(self.speed_jitter >= 0.0 && self.speed_jitter < self.speed) {
            return Err(ConfigError::new("speed_jitter", "must lie in [0, speed)"));
        }
        if self.lanes_per_direction == 0 {
            return Err(ConfigError::new("lanes_per_direction", "must be at least 1"));
        }
        Ok(())
    }

    pub fn lane_count(&self) -> u32 {
        2 * self.lanes_per_direction
    }

    /// Lanes `0..lanes_per_direction` run forward, the rest in reverse.
    pub fn lane_direction(&self, lane: u32) -> Direction {
        if lane < self.lanes_per_direction {
            Direction::Forward
        } else {
            Direction::Reverse
        }
    }

    pub fn lane_offset(&self, lane: u32) -> f64 {
        (f64::from(lane) + 0.5) * self.lane_width
    }

    fn draw_speed(&self, rng: &mut RngStream) -> f64 {
        if self.speed_jitter > 0.0 {
            rng.random_range(self.speed - self.speed_jitter..=self.speed + self.speed_jitter)
        } else {
            self.speed
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub lane: u32,
    pub x0: f64,
    /// Signed along-road velocity; negative in reverse lanes.
    pub velocity: f64,
    pub y: f64,
}

#[derive(Clone, Debug)]
pub struct Highway {
    cfg: HighwayConfig,
    vehicles: Vec<Vehicle>,
}

impl Highway {
    /// Places `count` vehicles round-robin over the lanes, each uniformly
    /// along the road.
    pub fn populate(cfg: HighwayConfig, count: usize, master_seed: u64) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let lanes = cfg.lane_count();
        let mut lane_rngs: Vec<_> = (0..lanes)
            .map(|l| RngStream::new(master_seed, streams::HIGHWAY_LANE + u64::from(l)))
            .collect();
        let vehicles = (0..count)
            .map(|i| {
                let lane = i as u32 % lanes;
                let rng = &mut lane_rngs[lane as usize];
                let x0 = rng.random_range(0.0..cfg.road_length);
                let speed = cfg.draw_speed(rng);
                let velocity = match cfg.lane_direction(lane) {
                    Direction::Forward => speed,
                    Direction::Reverse => -speed,
                };
                Vehicle {
                    lane,
                    x0,
                    velocity,
                    y: cfg.lane_offset(lane),
                }
            })
            .collect();
        Ok(Highway { cfg, vehicles })
    }

    pub fn from_vehicles(cfg: HighwayConfig, vehicles: Vec<Vehicle>) -> Self {
        Highway { cfg, vehicles }
    }

    pub fn config(&self) -> &HighwayConfig {
        &self.cfg
    }

    pub fn vehicles(&self) -> &[Vehicle] {
        &self.vehicles
    }

    pub fn position_at(&self, i: usize, t: f64) -> Option<Position> {
        let v = self.vehicles.get(i)?;
        let x = (v.x0 + v.velocity * t).rem_euclid(self.cfg.road_length);
        Some(Position { x, y: v.y })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaneArrivals {
    pub lane: u32,
    pub direction: Direction,
    /// Entry times, ascending.
    pub times: Vec<f64>,
    pub speeds: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrivalSchedule {
    pub road_length: f64,
    pub lanes: Vec<LaneArrivals>,
}

/// Poisson arrivals of rate `arrival_rate` on every lane over `[0, horizon)`.
/// Each lane draws from its own substream.
pub fn spawn_vehicles(
    cfg: &HighwayConfig,
    horizon: f64,
    master_seed: u64,
) -> Result<ArrivalSchedule, ConfigError> {
    cfg.validate()?;
    let exp = Exp::new(cfg.arrival_rate).map_err(|e| ConfigError::new("arrival_rate", e.to_string()))?;
    let lanes = (0..cfg.lane_count())
        .map(|lane| {
            let mut rng = RngStream::new(master_seed, streams::HIGHWAY_LANE + u64::from(lane));
            let mut times = vec![];
            let mut speeds = vec![];
            let mut t = exp.sample(&mut rng);
            while t < horizon {
                times.push(t);
                speeds.push(cfg.draw_speed(&mut rng));
                t += exp.sample(&mut rng);
            }
            LaneArrivals {
                lane,
                direction: cfg.lane_direction(lane),
                times,
                speeds,
            }
        })
        .collect();
    Ok(ArrivalSchedule {
        road_length: cfg.road_length,
        lanes,
    })
}

impl LaneArrivals {
    /// Along-road coordinates of the vehicles on the road at time `t`.
    pub fn positions_at(&self, t: f64, road_length: f64) -> Vec<f64> {
        match self.min_speed() {
            Some(v_min) => self.positions_with_min_speed(t, road_length, v_min),
            None => vec![],
        }
    }

    pub fn min_speed(&self) -> Option<f64> {
        self.speeds.iter().copied().reduce(f64::min)
    }

    /// [`LaneArrivals::positions_at`] with the lane's slowest speed supplied
    /// by the caller, for repeated sampling.
    pub fn positions_with_min_speed(&self, t: f64, road_length: f64, v_min: f64) -> Vec<f64> {
        let earliest = t - road_length / v_min;
        let lo = self.times.partition_point(|&a| a < earliest);
        let hi = self.times.partition_point(|&a| a <= t);
        (lo..hi)
            .filter_map(|i| {
                let travelled = (t - self.times[i]) * self.speeds[i];
                (travelled <= road_length).then_some(match self.direction {
                    Direction::Forward => travelled,
                    Direction::Reverse => road_length - travelled,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wraparound_position() {
        let cfg = HighwayConfig::default();
        let h = Highway::from_vehicles(
            cfg,
            vec![Vehicle {
                lane: 0,
                x0: 990.0,
                velocity: 20.0,
                y: 2.5,
            }],
        );
        let p = h.position_at(0, 1.0).unwrap();
        approx::assert_abs_diff_eq!(p.x, 10.0, epsilon = 1e-9);
    }

    #[test]
    fn reverse_lanes_move_backwards() {
        let cfg = HighwayConfig {
            speed_jitter: 3.0,
            ..Default::default()
        };
        let h = Highway::populate(cfg, 40, 5).unwrap();
        for v in h.vehicles() {
            match cfg.lane_direction(v.lane) {
                Direction::Forward => assert!(v.velocity > 0.0),
                Direction::Reverse => assert!(v.velocity < 0.0),
            }
            assert!((17.0..=23.0).contains(&v.velocity.abs()));
        }
    }

    #[test]
    fn zero_rate_rejected() {
        let cfg = HighwayConfig {
            arrival_rate: 0.0,
            ..Default::default()
        };
        assert_eq!(spawn_vehicles(&cfg, 10.0, 1).unwrap_err().field, "arrival_rate");
    }

    #[test]
    fn arrival_count_matches_rate() {
        // Poisson(λT) with λT = 100: one draw lies within 3σ = 30 of the mean.
        let cfg = HighwayConfig::default();
        let s = spawn_vehicles(&cfg, 1000.0, 42).unwrap();
        for lane in &s.lanes {
            let n = lane.times.len() as f64;
            assert!((n - 100.0).abs() <= 30.0, "lane {} saw {n}", lane.lane);
            assert!(lane.times.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn lanes_use_independent_substreams() {
        let s = spawn_vehicles(&HighwayConfig::default(), 500.0, 42).unwrap();
        assert_ne!(s.lanes[0].times, s.lanes[1].times);
        let again = spawn_vehicles(&HighwayConfig::default(), 500.0, 42).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn open_road_positions() {
        let lane = LaneArrivals {
            lane: 0,
            direction: Direction::Forward,
            times: vec![0.0, 10.0, 60.0],
            speeds: vec![20.0, 20.0, 20.0],
        };
        // At t=55 the first vehicle has left (1100 m travelled), the second is
        // at 900 m, the third has not arrived.
        assert_eq!(lane.positions_at(55.0, 1000.0), vec![900.0]);
        let rev = LaneArrivals {
            direction: Direction::Reverse,
            ..lane
        };
        assert_eq!(rev.positions_at(55.0, 1000.0), vec![100.0]);
    }
}
