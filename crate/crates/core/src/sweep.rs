//! Grids of scenarios run in parallel, with per-cell summaries.
//!
//! A sweep file uses the scenario format, except that `protocol`, `mac`,
//! `nodes` and `speed` take comma-separated lists and `reps` sets the number
//! of replications. Replication `r` runs with seed `seed + r`.

use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::radio::MacPreset;
use crate::routing::ProtocolKind;
use crate::scenario::{config_pairs, run_scenario, ResultRow, RowStatus, ScenarioConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub base: ScenarioConfig,
    pub protocols: Vec<ProtocolKind>,
    pub macs: Vec<MacPreset>,
    pub nodes: Vec<usize>,
    pub speeds: Vec<f64>,
    pub reps: u32,
}

const AXES: [&str; 5] = ["protocol", "mac", "nodes", "speed", "reps"];

fn list<T>(key: &str, value: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, ConfigError> {
    let items = value
        .split(',')
        .map(str::trim)
        .map(|s| parse(s).ok_or_else(|| ConfigError::new(key, format!("cannot parse `{s}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    if items.is_empty() {
        return Err(ConfigError::new(key, "empty list"));
    }
    Ok(items)
}

fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(", ")
}

impl SweepSpec {
    /// A single-cell sweep around `base`.
    pub fn single(base: ScenarioConfig, reps: u32) -> Self {
        SweepSpec {
            protocols: vec![base.protocol],
            macs: vec![base.mac],
            nodes: vec![base.nodes],
            speeds: vec![base.speed],
            reps,
            base,
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut spec = SweepSpec::single(ScenarioConfig::default(), 1);
        for (_, k, v) in config_pairs(text)? {
            match k.as_str() {
                "protocol" => spec.protocols = list(&k, &v, ProtocolKind::parse)?,
                "mac" => spec.macs = list(&k, &v, MacPreset::parse)?,
                "nodes" => spec.nodes = list(&k, &v, |s| s.parse().ok())?,
                "speed" => spec.speeds = list(&k, &v, |s| s.parse().ok())?,
                "reps" => spec.reps = v.parse().map_err(|_| ConfigError::new("reps", format!("cannot parse `{v}`")))?,
                _ => spec.base.set(&k, &v)?,
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn emit(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "protocol = {}", join(&self.protocols, |p| p.name().to_string()));
        let _ = writeln!(s, "mac = {}", join(&self.macs, |m| m.name().to_string()));
        let _ = writeln!(s, "nodes = {}", join(&self.nodes, usize::to_string));
        let _ = writeln!(s, "speed = {}", join(&self.speeds, f64::to_string));
        let _ = writeln!(s, "reps = {}", self.reps);
        for k in ScenarioConfig::KEYS.iter().filter(|k| !AXES.contains(k)) {
            let _ = writeln!(s, "{k} = {}", self.base.get(k).expect("known key"));
        }
        s
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.reps == 0 {
            return Err(ConfigError::new("reps", "at least one replication is required"));
        }
        if self.base.seed.checked_add(u64::from(self.reps - 1)).is_none() {
            return Err(ConfigError::new("seed", "seed + reps overflows"));
        }
        for c in self.cells() {
            c.validate()?;
        }
        Ok(())
    }

    /// Every (protocol, mac, nodes, speed, replication) configuration.
    pub fn cells(&self) -> Vec<ScenarioConfig> {
        let mut out = vec![];
        for &protocol in &self.protocols {
            for &mac in &self.macs {
                for &nodes in &self.nodes {
                    for &speed in &self.speeds {
                        for r in 0..self.reps {
                            out.push(ScenarioConfig {
                                protocol,
                                mac,
                                nodes,
                                speed,
                                seed: self.base.seed.wrapping_add(u64::from(r)),
                                ..self.base.clone()
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

pub fn row_order(a: &ResultRow, b: &ResultRow) -> std::cmp::Ordering {
    (a.protocol, a.mac, a.nodes)
        .cmp(&(b.protocol, b.mac, b.nodes))
        .then(a.speed_mps.total_cmp(&b.speed_mps))
        .then(a.seed.cmp(&b.seed))
}

fn run_guarded(cfg: &ScenarioConfig) -> ResultRow {
    match catch_unwind(AssertUnwindSafe(|| run_scenario(cfg))) {
        Ok(Ok(out)) => out.row,
        Ok(Err(e)) => ResultRow::failed(cfg, e.to_string()),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "simulation panicked".to_string());
            ResultRow::failed(cfg, msg)
        }
    }
}

/// Runs `configs` on `workers` threads; rows come back sorted, never in
/// completion order. A failing run yields a row with a failed status.
pub fn run_configs(configs: &[ScenarioConfig], workers: usize) -> Result<Vec<ResultRow>, ConfigError> {
    if workers == 0 {
        return Err(ConfigError::new("workers", "at least one worker is required"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ConfigError::new("workers", e.to_string()))?;
    let mut rows: Vec<ResultRow> = pool.install(|| configs.par_iter().map(run_guarded).collect());
    rows.sort_by(row_order);
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub n: usize,
    pub mean: Option<f64>,
    /// Standard error of the mean; needs at least two values.
    pub stderr: Option<f64>,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Stat {
                n,
                mean: None,
                stderr: None,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = (n > 1).then(|| {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        });
        Stat {
            n,
            mean: Some(mean),
            stderr,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    Pdr,
    Throughput,
    E2ed,
    Nrl,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Pdr, Metric::Throughput, Metric::E2ed, Metric::Nrl];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Pdr => "pdr",
            Metric::Throughput => "throughput_bps",
            Metric::E2ed => "e2ed_ms",
            Metric::Nrl => "nrl",
        }
    }

    pub fn of(self, row: &ResultRow) -> Option<f64> {
        match self {
            Metric::Pdr => row.pdr,
            Metric::Throughput => Some(row.throughput_bps),
            Metric::E2ed => row.e2ed_ms,
            Metric::Nrl => row.nrl,
        }
    }
}

/// Aggregate of one (protocol, mac, nodes, speed) cell over replications.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub protocol: ProtocolKind,
    pub mac: MacPreset,
    pub nodes: usize,
    pub speed_mps: f64,
    pub reps: usize,
    pub failed: usize,
    /// Indexed like [`Metric::ALL`]; failed runs are excluded.
    pub stats: [Stat; 4],
}

impl SummaryRow {
    pub fn stat(&self, m: Metric) -> Stat {
        self.stats[Metric::ALL.iter().position(|&x| x == m).expect("listed metric")]
    }
}

/// Expects rows sorted as [`run_configs`] returns them.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    rows.chunk_by(|a, b| (a.protocol, a.mac, a.nodes, a.speed_mps) == (b.protocol, b.mac, b.nodes, b.speed_mps))
        .map(|cell| {
            let ok: Vec<&ResultRow> = cell.iter().filter(|r| r.status == RowStatus::Ok).collect();
            let stats = Metric::ALL.map(|m| Stat::of(&ok.iter().filter_map(|r| m.of(r)).collect::<Vec<_>>()));
            SummaryRow {
                protocol: cell[0].protocol,
                mac: cell[0].mac,
                nodes: cell[0].nodes,
                speed_mps: cell[0].speed_mps,
                reps: cell.len(),
                failed: cell.len() - ok.len(),
                stats,
            }
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct SweepOutput {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
}

pub fn run_sweep(spec: &SweepSpec, workers: usize) -> Result<SweepOutput, ConfigError> {
    spec.validate()?;
    let rows = run_configs(&spec.cells(), workers)?;
    let summary = summarize(&rows);
    Ok(SweepOutput { rows, summary })
}
