//! Closed-form connectivity model for highway segments.
//!
//! The number of vehicles inside a road segment is Poisson with mean `phi`.
//! For a constant-speed flow entering at rate λ the stationary mean is
//! `λ·L/v`. Link durations follow from 1-D relative motion through a `2R`
//! contact window.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

use crate::error::{AnalyticsError, ConfigError};
use crate::mobility::{spawn_vehicles, ArrivalSchedule, Boundary, HighwayConfig, LaneArrivals};

fn non_negative(name: &'static str, value: f64) -> Result<f64, AnalyticsError> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(AnalyticsError::Negative { name, value })
    }
}

fn positive(name: &'static str, value: f64) -> Result<f64, AnalyticsError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(AnalyticsError::NonPositive { name, value })
    }
}

/// `P(N = n)` for `N ~ Poisson(phi)`.
pub fn poisson_pmf(phi: f64, n: u64) -> Result<f64, AnalyticsError> {
    let phi = non_negative("phi", phi)?;
    if phi == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    if n <= 20 {
        let mut term = (-phi).exp();
        for k in 1..=n {
            term *= phi / k as f64;
        }
        Ok(term)
    } else {
        let n = n as f64;
        Ok((-phi + n * phi.ln() - ln_gamma(n + 1.0)).exp())
    }
}

/// Probability generating function `E[z^N] = exp(-phi (1 - z))`.
pub fn pgf(phi: f64, z: f64) -> Result<f64, AnalyticsError> {
    let phi = non_negative("phi", phi)?;
    if !(0.0..=1.0).contains(&z) {
        return Err(AnalyticsError::ZOutOfRange(z));
    }
    Ok((-phi * (1.0 - z)).exp())
}

/// Probability that at least one vehicle occupies the segment.
pub fn p_nonempty(phi: f64) -> Result<f64, AnalyticsError> {
    Ok(1.0 - pgf(phi, 0.0)?)
}

/// Stationary mean occupancy `λ·L/v` of a segment of length `seg_length`.
pub fn steady_state_phi(lambda: f64, speed: f64, seg_length: f64) -> Result<f64, AnalyticsError> {
    Ok(positive("lambda", lambda)? * positive("seg_length", seg_length)? / positive("speed", speed)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Heading {
    Same,
    Opposite,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KinematicPair {
    pub v1: f64,
    pub v2: f64,
    pub heading: Heading,
    pub range: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum LinkDuration {
    Finite(f64),
    Unbounded,
}

impl LinkDuration {
    pub fn seconds(self) -> Option<f64> {
        match self {
            LinkDuration::Finite(s) => Some(s),
            LinkDuration::Unbounded => None,
        }
    }
}

/// Time two vehicles stay within `range` of each other, counted from the
/// instant they come into range.
pub fn link_duration(pair: KinematicPair) -> Result<LinkDuration, AnalyticsError> {
    let v1 = positive("v1", pair.v1)?;
    let v2 = positive("v2", pair.v2)?;
    let r = positive("range", pair.range)?;
    let relative = match pair.heading {
        Heading::Same => (v1 - v2).abs(),
        Heading::Opposite => v1 + v2,
    };
    if relative == 0.0 {
        Ok(LinkDuration::Unbounded)
    } else {
        Ok(LinkDuration::Finite(2.0 * r / relative))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitStatus {
    Pass,
    Fail,
    /// Too few samples to judge.
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyReport {
    pub phi: f64,
    pub samples: u64,
    pub mean: f64,
    pub variance: f64,
    /// Variance over mean; 1 for a Poisson count.
    pub dispersion: f64,
    /// `frequencies[n]` = number of samples with exactly `n` vehicles.
    pub frequencies: Vec<u64>,
    pub chi_square: f64,
    pub degrees_of_freedom: u64,
    pub p_value: f64,
    pub status: FitStatus,
}

pub const MIN_OCCUPANCY_SAMPLES: u64 = 100_000;
pub const MEAN_TOLERANCE: f64 = 0.02;
pub const DISPERSION_BAND: (f64, f64) = (0.9, 1.1);

/// Compares per-sample segment counts with `Poisson(phi)`. Passes when the
/// mean is within 2% of `phi` and variance/mean lies in [0.9, 1.1]; fewer
/// than [`MIN_OCCUPANCY_SAMPLES`] samples give an inconclusive report.
pub fn validate_occupancy(counts: &[u64], phi: f64) -> Result<OccupancyReport, AnalyticsError> {
    let phi = positive("phi", phi)?;
    let samples = counts.len() as u64;
    let mut frequencies = vec![];
    for &c in counts {
        let c = c as usize;
        if frequencies.len() <= c {
            frequencies.resize(c + 1, 0);
        }
        frequencies[c] += 1;
    }
    if samples == 0 {
        return Ok(OccupancyReport {
            phi,
            samples,
            mean: f64::NAN,
            variance: f64::NAN,
            dispersion: f64::NAN,
            frequencies,
            chi_square: f64::NAN,
            degrees_of_freedom: 0,
            p_value: f64::NAN,
            status: FitStatus::Inconclusive,
        });
    }
    let n = samples as f64;
    let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / n;
    let variance = if samples > 1 {
        counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let dispersion = if mean > 0.0 { variance / mean } else { f64::NAN };
    let (chi_square, degrees_of_freedom) = chi_square(&frequencies, phi, n)?;
    let p_value = if degrees_of_freedom > 0 {
        ChiSquared::new(degrees_of_freedom as f64)
            .map(|d| 1.0 - d.cdf(chi_square))
            .unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };
    let status = if samples < MIN_OCCUPANCY_SAMPLES {
        FitStatus::Inconclusive
    } else if (mean - phi).abs() <= MEAN_TOLERANCE * phi
        && (DISPERSION_BAND.0..=DISPERSION_BAND.1).contains(&dispersion)
    {
        FitStatus::Pass
    } else {
        FitStatus::Fail
    };
    Ok(OccupancyReport {
        phi,
        samples,
        mean,
        variance,
        dispersion,
        frequencies,
        chi_square,
        degrees_of_freedom,
        p_value,
        status,
    })
}

/// Pearson statistic over bins `0..k` plus a pooled tail, where `k` is the
/// first count whose expected frequency drops below 5.
fn chi_square(frequencies: &[u64], phi: f64, n: f64) -> Result<(f64, u64), AnalyticsError> {
    let mut stat = 0.0;
    let mut bins = 0u64;
    let mut cumulative = 0.0;
    let mut observed_so_far = 0u64;
    let mut k = 0u64;
    loop {
        let p = poisson_pmf(phi, k)?;
        let expected = p * n;
        let tail_expected = (1.0 - cumulative - p).max(0.0) * n;
        if expected < 5.0 || tail_expected < 5.0 {
            break;
        }
        let observed = frequencies.get(k as usize).copied().unwrap_or(0);
        stat += (observed as f64 - expected).powi(2) / expected;
        cumulative += p;
        observed_so_far += observed;
        bins += 1;
        k += 1;
    }
    let tail_expected = (1.0 - cumulative).max(0.0) * n;
    if tail_expected > 0.0 {
        let observed = n - observed_so_far as f64;
        stat += (observed - tail_expected).powi(2) / tail_expected;
        bins += 1;
    }
    Ok((stat, bins.saturating_sub(1)))
}

/// Vehicle counts in `[seg_start, seg_start + seg_length)` on every lane,
/// sampled at `warmup, warmup + spacing, ...` for `times` instants. Each
/// lane contributes one sample per instant.
pub fn sample_segment_counts(
    schedule: &ArrivalSchedule,
    seg_start: f64,
    seg_length: f64,
    warmup: f64,
    spacing: f64,
    times: usize,
) -> Vec<u64> {
    let seg_end = seg_start + seg_length;
    let mut counts = Vec::with_capacity(times * schedule.lanes.len());
    let v_min: Vec<Option<f64>> = schedule.lanes.iter().map(LaneArrivals::min_speed).collect();
    for k in 0..times {
        let t = warmup + k as f64 * spacing;
        for (lane, v) in schedule.lanes.iter().zip(&v_min) {
            let Some(v) = *v else {
                counts.push(0);
                continue;
            };
            let c = lane
                .positions_with_min_speed(t, schedule.road_length, v)
                .into_iter()
                .filter(|&x| x >= seg_start && x < seg_end)
                .count();
            counts.push(c as u64);
        }
    }
    counts
}

/// Open-road occupancy measurement: constant-speed Poisson traffic, counts
/// taken in a central segment once the road has filled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyExperiment {
    pub highway: HighwayConfig,
    pub seg_start: f64,
    pub seg_length: f64,
    /// Gap between sampling instants. At least `seg_length / speed` keeps
    /// successive samples of one lane free of shared vehicles.
    pub spacing: f64,
    pub instants: usize,
    pub seed: u64,
}

impl Default for OccupancyExperiment {
    fn default() -> Self {
        OccupancyExperiment {
            highway: HighwayConfig {
                road_length: 1000.0,
                lanes_per_direction: 2,
                arrival_rate: 0.1,
                speed: 20.0,
                speed_jitter: 0.0,
                boundary: Boundary::Open,
                ..HighwayConfig::default()
            },
            seg_start: 300.0,
            seg_length: 400.0,
            spacing: 20.0,
            instants: 25_000,
            seed: 1,
        }
    }
}

impl OccupancyExperiment {
    pub fn phi(&self) -> Result<f64, AnalyticsError> {
        steady_state_phi(self.highway.arrival_rate, self.highway.speed, self.seg_length)
    }

    /// Time for the slowest vehicle to cross the whole road.
    pub fn warmup(&self) -> f64 {
        self.highway.road_length / (self.highway.speed - self.highway.speed_jitter)
    }

    pub fn horizon(&self) -> f64 {
        self.warmup() + self.spacing * self.instants as f64
    }

    fn check(&self) -> Result<(), AnalyticsError> {
        self.highway.validate()?;
        positive("spacing", self.spacing)?;
        positive("seg_length", self.seg_length)?;
        non_negative("seg_start", self.seg_start)?;
        if self.seg_start + self.seg_length > self.highway.road_length {
            return Err(ConfigError::new("seg_start", "segment must lie on the road").into());
        }
        Ok(())
    }

    fn counts(&self, schedule: &ArrivalSchedule) -> Vec<u64> {
        sample_segment_counts(schedule, self.seg_start, self.seg_length, self.warmup(), self.spacing, self.instants)
    }

    /// Counts under Poisson arrivals.
    pub fn poisson_counts(&self) -> Result<Vec<u64>, AnalyticsError> {
        self.check()?;
        let schedule = spawn_vehicles(&self.highway, self.horizon(), self.seed)?;
        Ok(self.counts(&schedule))
    }

    /// Counts for an equally spaced convoy with the same mean flow. The
    /// occupancy barely varies, so the Poisson fit must reject it.
    pub fn convoy_counts(&self) -> Result<Vec<u64>, AnalyticsError> {
        self.check()?;
        let h = &self.highway;
        let headway = 1.0 / h.arrival_rate;
        let lanes = (0..h.lane_count())
            .map(|lane| {
                let offset = headway * f64::from(lane) / f64::from(h.lane_count());
                let times: Vec<f64> = (0..)
                    .map(|k| offset + k as f64 * headway)
                    .take_while(|&t| t < self.horizon())
                    .collect();
                LaneArrivals {
                    lane,
                    direction: h.lane_direction(lane),
                    speeds: vec![h.speed; times.len()],
                    times,
                }
            })
            .collect();
        Ok(self.counts(&ArrivalSchedule {
            road_length: h.road_length,
            lanes,
        }))
    }
}

/// One row of the occupancy curve: mean occupancy and nonempty probability
/// for a linear density (vehicles per km) over a segment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OccupancyPoint {
    pub density_per_km: f64,
    pub seg_length: f64,
    pub phi: f64,
    pub p_empty: f64,
    pub p_nonempty: f64,
}

pub fn occupancy_curve(densities_per_km: &[f64], seg_length: f64) -> Result<Vec<OccupancyPoint>, AnalyticsError> {
    let seg_length = positive("seg_length", seg_length)?;
    densities_per_km
        .iter()
        .map(|&d| {
            let phi = non_negative("density", d)? * seg_length / 1000.0;
            Ok(OccupancyPoint {
                density_per_km: d,
                seg_length,
                phi,
                p_empty: pgf(phi, 0.0)?,
                p_nonempty: p_nonempty(phi)?,
            })
        })
        .collect()
}
