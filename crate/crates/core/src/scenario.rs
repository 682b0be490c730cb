//! Scenario configuration and single-run execution.
//!
//! A scenario is a flat set of `key = value` settings. Unset optional keys
//! are written as `auto` and resolved from the MAC preset: 802.11 runs use
//! random-waypoint mobility with Rayleigh fading (m = 1), 802.11p runs use
//! the highway with m = 3.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::metrics::{self, MetricsLedger};
use crate::mobility::{Boundary, Highway, HighwayConfig, Mobility, Position, RandomWaypoint, Track, WaypointConfig};
use crate::net::{MacStats, NetConfig, Network, RoutingProtocol};
use crate::radio::{ChannelModel, MacConfig, MacPreset, Propagation};
use crate::routing::aodv::{Aodv, AodvConfig};
use crate::routing::dsr::{Dsr, DsrConfig};
use crate::routing::fsr::{Fsr, FsrConfig};
use crate::routing::ProtocolKind;
use crate::sim::{streams, RngStream};
use crate::traffic::{spawn_flows, CbrFlow};
use crate::NodeId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MobilityKind {
    Waypoint,
    Highway,
    /// Nodes placed uniformly in the field and never moving.
    Static,
}

impl MobilityKind {
    pub fn name(self) -> &'static str {
        match self {
            MobilityKind::Waypoint => "waypoint",
            MobilityKind::Highway => "highway",
            MobilityKind::Static => "static",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "waypoint" => Some(MobilityKind::Waypoint),
            "highway" => Some(MobilityKind::Highway),
            "static" => Some(MobilityKind::Static),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PropagationKind {
    Nakagami,
    UnitDisk,
}

impl PropagationKind {
    pub fn name(self) -> &'static str {
        match self {
            PropagationKind::Nakagami => "nakagami",
            PropagationKind::UnitDisk => "unit-disk",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "nakagami" => Some(PropagationKind::Nakagami),
            "unit-disk" => Some(PropagationKind::UnitDisk),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub protocol: ProtocolKind,
    pub mac: MacPreset,
    pub nodes: usize,
    pub speed: f64,
    pub seed: u64,
    pub sim_time: f64,
    pub warmup: f64,
    pub flows: usize,
    pub packet_size: u32,
    pub packet_interval: f64,
    pub mobility: Option<MobilityKind>,
    pub propagation: PropagationKind,
    pub nakagami_m: Option<f64>,
    pub path_loss_exponent: f64,
    pub range: f64,
    pub data_rate: f64,
    pub field_width: f64,
    pub field_height: f64,
    pub pause: f64,
    pub road_length: f64,
    pub lanes_per_direction: u32,
    pub lane_width: f64,
    /// Per-vehicle speed spread on the highway, as a fraction of `speed`.
    pub speed_jitter: f64,
    pub aodv_ttl_start: Option<u32>,
    pub aodv_ttl_increment: Option<u32>,
    pub aodv_ttl_threshold: Option<u32>,
    pub aodv_hello: Option<bool>,
    pub aodv_local_repair: Option<bool>,
    pub dsr_cache_capacity: Option<usize>,
    pub dsr_promiscuous: Option<bool>,
    pub fsr_inner_interval: Option<f64>,
    pub fsr_outer_interval: Option<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            protocol: ProtocolKind::Aodv,
            mac: MacPreset::Dot11,
            nodes: 25,
            speed: 2.0,
            seed: 1,
            sim_time: 900.0,
            warmup: 50.0,
            flows: 10,
            packet_size: 512,
            packet_interval: 0.03,
            mobility: None,
            propagation: PropagationKind::Nakagami,
            nakagami_m: None,
            path_loss_exponent: 2.0,
            range: 250.0,
            data_rate: 2_000_000.0,
            field_width: 1000.0,
            field_height: 1000.0,
            pause: 0.0,
            road_length: 2000.0,
            lanes_per_direction: 2,
            lane_width: 5.0,
            speed_jitter: 0.1,
            aodv_ttl_start: None,
            aodv_ttl_increment: None,
            aodv_ttl_threshold: None,
            aodv_hello: None,
            aodv_local_repair: None,
            dsr_cache_capacity: None,
            dsr_promiscuous: None,
            fsr_inner_interval: None,
            fsr_outer_interval: None,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError::new(key, format!("cannot parse `{value}`")))
}

fn parse_auto<T: FromStr>(key: &str, value: &str) -> Result<Option<T>, ConfigError> {
    if value == "auto" {
        Ok(None)
    } else {
        parse_value(key, value).map(Some)
    }
}

fn auto<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "auto".to_string(), T::to_string)
}

/// Splits `key = value` lines, skipping blanks and `#` comments. Returns
/// `(line number, key, value)`.
pub fn config_pairs(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut out = vec![];
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split_once('#').map_or(raw, |(l, _)| l).trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::new(
                format!("line {}", i + 1),
                format!("expected `key = value`, found `{line}`"),
            ));
        };
        out.push((i + 1, k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl ScenarioConfig {
    pub const KEYS: [&'static str; 32] = [
        "protocol",
        "mac",
        "nodes",
        "speed",
        "seed",
        "sim_time",
        "warmup",
        "flows",
        "packet_size",
        "packet_interval",
        "mobility",
        "propagation",
        "nakagami_m",
        "path_loss_exponent",
        "range",
        "data_rate",
        "field_width",
        "field_height",
        "pause",
        "road_length",
        "lanes_per_direction",
        "lane_width",
        "speed_jitter",
        "aodv_ttl_start",
        "aodv_ttl_increment",
        "aodv_ttl_threshold",
        "aodv_hello",
        "aodv_local_repair",
        "dsr_cache_capacity",
        "dsr_promiscuous",
        "fsr_inner_interval",
        "fsr_outer_interval",
    ];

    /// Applies one setting; unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "protocol" => {
                self.protocol = ProtocolKind::parse(value).ok_or_else(|| {
                    ConfigError::new(key, format!("unknown protocol `{value}` (aodv, mod-aodv, dsr, mod-dsr, fsr, mod-fsr)"))
                })?
            }
            "mac" => {
                self.mac = MacPreset::parse(value)
                    .ok_or_else(|| ConfigError::new(key, format!("unknown MAC `{value}` (80211, 80211p, ideal)")))?
            }
            "nodes" => self.nodes = parse_value(key, value)?,
            "speed" => self.speed = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "sim_time" => self.sim_time = parse_value(key, value)?,
            "warmup" => self.warmup = parse_value(key, value)?,
            "flows" => self.flows = parse_value(key, value)?,
            "packet_size" => self.packet_size = parse_value(key, value)?,
            "packet_interval" => self.packet_interval = parse_value(key, value)?,
            "mobility" => {
                self.mobility = if value == "auto" {
                    None
                } else {
                    Some(MobilityKind::parse(value).ok_or_else(|| {
                        ConfigError::new(key, format!("unknown mobility `{value}` (waypoint, highway, static, auto)"))
                    })?)
                }
            }
            "propagation" => {
                self.propagation = PropagationKind::parse(value)
                    .ok_or_else(|| ConfigError::new(key, format!("unknown propagation `{value}` (nakagami, unit-disk)")))?
            }
            "nakagami_m" => self.nakagami_m = parse_auto(key, value)?,
            "path_loss_exponent" => self.path_loss_exponent = parse_value(key, value)?,
            "range" => self.range = parse_value(key, value)?,
            "data_rate" => self.data_rate = parse_value(key, value)?,
            "field_width" => self.field_width = parse_value(key, value)?,
            "field_height" => self.field_height = parse_value(key, value)?,
            "pause" => self.pause = parse_value(key, value)?,
            "road_length" => self.road_length = parse_value(key, value)?,
            "lanes_per_direction" => self.lanes_per_direction = parse_value(key, value)?,
            "lane_width" => self.lane_width = parse_value(key, value)?,
            "speed_jitter" => self.speed_jitter = parse_value(key, value)?,
            "aodv_ttl_start" => self.aodv_ttl_start = parse_auto(key, value)?,
            "aodv_ttl_increment" => self.aodv_ttl_increment = parse_auto(key, value)?,
            "aodv_ttl_threshold" => self.aodv_ttl_threshold = parse_auto(key, value)?,
            "aodv_hello" => self.aodv_hello = parse_auto(key, value)?,
            "aodv_local_repair" => self.aodv_local_repair = parse_auto(key, value)?,
            "dsr_cache_capacity" => self.dsr_cache_capacity = parse_auto(key, value)?,
            "dsr_promiscuous" => self.dsr_promiscuous = parse_auto(key, value)?,
            "fsr_inner_interval" => self.fsr_inner_interval = parse_auto(key, value)?,
            "fsr_outer_interval" => self.fsr_outer_interval = parse_auto(key, value)?,
            _ => return Err(ConfigError::new(key, "unknown configuration key")),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "protocol" => self.protocol.name().to_string(),
            "mac" => self.mac.name().to_string(),
            "nodes" => self.nodes.to_string(),
            "speed" => self.speed.to_string(),
            "seed" => self.seed.to_string(),
            "sim_time" => self.sim_time.to_string(),
            "warmup" => self.warmup.to_string(),
            "flows" => self.flows.to_string(),
            "packet_size" => self.packet_size.to_string(),
            "packet_interval" => self.packet_interval.to_string(),
            "mobility" => self.mobility.map_or("auto", MobilityKind::name).to_string(),
            "propagation" => self.propagation.name().to_string(),
            "nakagami_m" => auto(&self.nakagami_m),
            "path_loss_exponent" => self.path_loss_exponent.to_string(),
            "range" => self.range.to_string(),
            "data_rate" => self.data_rate.to_string(),
            "field_width" => self.field_width.to_string(),
            "field_height" => self.field_height.to_string(),
            "pause" => self.pause.to_string(),
            "road_length" => self.road_length.to_string(),
            "lanes_per_direction" => self.lanes_per_direction.to_string(),
            "lane_width" => self.lane_width.to_string(),
            "speed_jitter" => self.speed_jitter.to_string(),
            "aodv_ttl_start" => auto(&self.aodv_ttl_start),
            "aodv_ttl_increment" => auto(&self.aodv_ttl_increment),
            "aodv_ttl_threshold" => auto(&self.aodv_ttl_threshold),
            "aodv_hello" => auto(&self.aodv_hello),
            "aodv_local_repair" => auto(&self.aodv_local_repair),
            "dsr_cache_capacity" => auto(&self.dsr_cache_capacity),
            "dsr_promiscuous" => auto(&self.dsr_promiscuous),
            "fsr_inner_interval" => auto(&self.fsr_inner_interval),
            "fsr_outer_interval" => auto(&self.fsr_outer_interval),
            _ => return None,
        })
    }

    /// Parses a config file on top of the defaults, then validates it.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ScenarioConfig::default();
        for (_, k, v) in config_pairs(text)? {
            cfg.set(&k, &v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every key in canonical order; `parse(emit())` reproduces `self`.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        for k in Self::KEYS {
            let _ = writeln!(s, "{k} = {}", self.get(k).expect("known key"));
        }
        s
    }

    pub fn resolved_mobility(&self) -> MobilityKind {
        self.mobility.unwrap_or(match self.mac {
            MacPreset::Dot11p => MobilityKind::Highway,
            MacPreset::Dot11 | MacPreset::Ideal => MobilityKind::Waypoint,
        })
    }

    pub fn resolved_nakagami_m(&self) -> f64 {
        self.nakagami_m.unwrap_or(match self.mac {
            MacPreset::Dot11p => 3.0,
            MacPreset::Dot11 | MacPreset::Ideal => 1.0,
        })
    }

    pub fn channel(&self) -> ChannelModel {
        let propagation = match self.propagation {
            PropagationKind::UnitDisk => Propagation::UnitDisk { range: self.range },
            PropagationKind::Nakagami => Propagation::Nakagami {
                m: self.resolved_nakagami_m(),
                range: self.range,
                path_loss_exponent: self.path_loss_exponent,
            },
        };
        ChannelModel {
            propagation,
            data_rate: self.data_rate,
        }
    }

    pub fn waypoint(&self) -> WaypointConfig {
        WaypointConfig {
            width: self.field_width,
            height: self.field_height,
            speed: self.speed,
            pause: self.pause,
        }
    }

    pub fn highway(&self) -> HighwayConfig {
        HighwayConfig {
            road_length: self.road_length,
            lanes_per_direction: self.lanes_per_direction,
            lane_width: self.lane_width,
            speed: self.speed,
            speed_jitter: self.speed_jitter * self.speed,
            boundary: Boundary::Wraparound,
            ..HighwayConfig::default()
        }
    }

    pub fn aodv(&self) -> AodvConfig {
        let base = if self.protocol.is_modified() {
            AodvConfig::modified()
        } else {
            AodvConfig::default()
        };
        AodvConfig {
            ttl_start: self.aodv_ttl_start.unwrap_or(base.ttl_start),
            ttl_increment: self.aodv_ttl_increment.unwrap_or(base.ttl_increment),
            ttl_threshold: self.aodv_ttl_threshold.unwrap_or(base.ttl_threshold),
            hello_enabled: self.aodv_hello.unwrap_or(base.hello_enabled),
            local_repair: self.aodv_local_repair.unwrap_or(base.local_repair),
            ..base
        }
    }

    pub fn dsr(&self) -> DsrConfig {
        let base = if self.protocol.is_modified() {
            DsrConfig::modified()
        } else {
            DsrConfig::default()
        };
        DsrConfig {
            cache_capacity: self.dsr_cache_capacity.unwrap_or(base.cache_capacity),
            promiscuous: self.dsr_promiscuous.unwrap_or(base.promiscuous),
            ..base
        }
    }

    pub fn fsr(&self) -> FsrConfig {
        let base = if self.protocol.is_modified() {
            FsrConfig::modified()
        } else {
            FsrConfig::default()
        };
        FsrConfig::with_intervals(
            self.fsr_inner_interval.unwrap_or(base.inner_interval),
            self.fsr_outer_interval.unwrap_or(base.outer_interval),
        )
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.nodes < 2 {
            return Err(ConfigError::new("nodes", "at least 2 nodes are required"));
        }
        if self.nodes > u32::MAX as usize {
            return Err(ConfigError::new("nodes", "too many nodes"));
        }
        if !(self.sim_time.is_finite() && self.sim_time > 0.0) {
            return Err(ConfigError::new("sim_time", "must be strictly positive"));
        }
        if !(self.warmup >= 0.0) {
            return Err(ConfigError::new("warmup", "must be non-negative"));
        }
        if self.sim_time <= self.warmup {
            return Err(ConfigError::new("sim_time", "must exceed warmup"));
        }
        if !(self.speed.is_finite() && self.speed >= 0.0) {
            return Err(ConfigError::new("speed", "must be non-negative"));
        }
        if self.resolved_mobility() != MobilityKind::Static && self.speed <= 0.0 {
            return Err(ConfigError::new("speed", "mobile scenarios need a strictly positive speed"));
        }
        if self.packet_size == 0 {
            return Err(ConfigError::new("packet_size", "must be strictly positive"));
        }
        if !(self.packet_interval > 0.0) {
            return Err(ConfigError::new("packet_interval", "must be strictly positive"));
        }
        if !(0.0..1.0).contains(&self.speed_jitter) {
            return Err(ConfigError::new("speed_jitter", "must lie in [0, 1)"));
        }
        let pairs = self.nodes * (self.nodes - 1);
        if self.flows > pairs {
            return Err(ConfigError::new(
                "flows",
                format!("{} flows requested but only {pairs} ordered pairs exist", self.flows),
            ));
        }
        self.channel().validate()?;
        match self.resolved_mobility() {
            MobilityKind::Waypoint => self.waypoint().validate()?,
            MobilityKind::Highway => self.highway().validate()?,
            MobilityKind::Static => {
                if !(self.field_width > 0.0 && self.field_height > 0.0) {
                    return Err(ConfigError::new("field_width", "field must have positive extent"));
                }
            }
        }
        match self.protocol.family() {
            "aodv" => self.aodv().validate()?,
            "dsr" => self.dsr().validate()?,
            _ => self.fsr().validate()?,
        }
        Ok(())
    }

    /// Stable identifier of the (protocol, mac, nodes, speed, seed) cell.
    pub fn scenario_id(&self) -> String {
        format!(
            "{}_{}_n{}_v{}_s{}",
            self.protocol.name(),
            self.mac.name(),
            self.nodes,
            self.speed,
            self.seed
        )
    }

    pub fn build_mobility(&self) -> Result<Mobility, ConfigError> {
        let n = self.nodes;
        Ok(match self.resolved_mobility() {
            MobilityKind::Waypoint => {
                let cfg = self.waypoint();
                let tracks = (0..n as u32)
                    .map(|i| RandomWaypoint::new(cfg, self.seed, i).map(|w| w.track(self.sim_time)))
                    .collect::<Result<Vec<_>, _>>()?;
                Mobility::Tracks(tracks)
            }
            MobilityKind::Highway => Mobility::Highway(Highway::populate(self.highway(), n, self.seed)?),
            MobilityKind::Static => {
                use rand::Rng;
                let tracks = (0..n as u64)
                    .map(|i| {
                        let mut rng = RngStream::new(self.seed, streams::MOBILITY + i);
                        Track::stationary(Position::new(
                            rng.random_range(0.0..=self.field_width),
                            rng.random_range(0.0..=self.field_height),
                        ))
                    })
                    .collect();
                Mobility::Tracks(tracks)
            }
        })
    }

    pub fn build_flows(&self) -> Result<Vec<CbrFlow>, ConfigError> {
        let mut rng = RngStream::new(self.seed, streams::TRAFFIC);
        let mut flows = spawn_flows(self.flows, self.nodes, self.sim_time, &mut rng)?;
        for f in &mut flows {
            f.interval = self.packet_interval;
            f.payload = self.packet_size;
        }
        Ok(flows)
    }

    pub fn net_config(&self) -> NetConfig {
        NetConfig {
            channel: self.channel(),
            mac: MacConfig::from_preset(self.mac),
            warmup: self.warmup,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RowStatus {
    Ok,
    Failed(String),
}

/// One scenario's metrics, as emitted in the results CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario_id: String,
    pub protocol: ProtocolKind,
    pub mac: MacPreset,
    pub nodes: usize,
    pub speed_mps: f64,
    pub seed: u64,
    pub sim_time_s: f64,
    pub data_sent: u64,
    pub data_delivered: u64,
    pub pdr: Option<f64>,
    pub throughput_bps: f64,
    pub e2ed_ms: Option<f64>,
    pub nrl: Option<f64>,
    pub status: RowStatus,
}

impl ResultRow {
    /// Derives every metric from the run's ledger; used both when a run
    /// finishes and when auditing a saved ledger.
    pub fn from_ledger(cfg: &ScenarioConfig, ledger: &MetricsLedger) -> Self {
        ResultRow {
            scenario_id: cfg.scenario_id(),
            protocol: cfg.protocol,
            mac: cfg.mac,
            nodes: cfg.nodes,
            speed_mps: cfg.speed,
            seed: cfg.seed,
            sim_time_s: cfg.sim_time,
            data_sent: ledger.data_sent,
            data_delivered: ledger.data_delivered,
            pdr: (ledger.data_sent > 0).then(|| ledger.data_delivered as f64 / ledger.data_sent as f64),
            throughput_bps: metrics::throughput(ledger, cfg.sim_time - cfg.warmup),
            e2ed_ms: metrics::e2ed(ledger),
            nrl: metrics::nrl(ledger),
            status: RowStatus::Ok,
        }
    }

    pub fn failed(cfg: &ScenarioConfig, reason: String) -> Self {
        ResultRow {
            status: RowStatus::Failed(reason),
            ..Self::from_ledger(cfg, &MetricsLedger::new(cfg.warmup))
        }
    }
}

/// Everything a finished run produced.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub row: ResultRow,
    pub ledger: MetricsLedger,
    pub mac: MacStats,
    pub trace_digest: u64,
    pub events: u64,
}

/// Audit record: the configuration and raw counters behind one row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerDump {
    pub config: ScenarioConfig,
    pub ledger: MetricsLedger,
}

impl LedgerDump {
    pub fn recompute(&self) -> ResultRow {
        ResultRow::from_ledger(&self.config, &self.ledger)
    }
}

fn simulate<P: RoutingProtocol>(cfg: &ScenarioConfig, agents: Vec<P>) -> Result<RunOutput, ConfigError> {
    let mobility = cfg.build_mobility()?;
    let flows = cfg.build_flows()?;
    let mut net = Network::new(cfg.net_config(), mobility, agents);
    for f in flows {
        net.add_flow(f);
    }
    net.run_until(cfg.sim_time);
    let mac = net.mac_stats();
    let trace_digest = net.trace_digest();
    let events = net.dispatched();
    let ledger = net.into_ledger();
    Ok(RunOutput {
        row: ResultRow::from_ledger(cfg, &ledger),
        ledger,
        mac,
        trace_digest,
        events,
    })
}

/// Runs one complete simulation.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput, ConfigError> {
    cfg.validate()?;
    let ids = (0..cfg.nodes as u32).map(NodeId);
    match cfg.protocol.family() {
        "aodv" => {
            let c = cfg.aodv();
            simulate(cfg, ids.map(|i| Aodv::new(i, c)).collect())
        }
        "dsr" => {
            let c = cfg.dsr();
            simulate(cfg, ids.map(|i| Dsr::new(i, c)).collect())
        }
        _ => {
            let c = cfg.fsr();
            simulate(cfg, ids.map(|i| Fsr::new(i, c)).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_resolve_by_mac() {
        let c = ScenarioConfig::default();
        c.validate().unwrap();
        assert_eq!(c.resolved_mobility(), MobilityKind::Waypoint);
        assert_eq!(c.resolved_nakagami_m(), 1.0);
        let v = ScenarioConfig {
            mac: MacPreset::Dot11p,
            ..c
        };
        assert_eq!(v.resolved_mobility(), MobilityKind::Highway);
        assert_eq!(v.resolved_nakagami_m(), 3.0);
    }

    #[test]
    fn single_node_rejected() {
        let c = ScenarioConfig {
            nodes: 1,
            ..Default::default()
        };
        assert_eq!(c.validate().unwrap_err().field, "nodes");
    }

    #[test]
    fn bad_values_name_the_field() {
        assert_eq!(ScenarioConfig::parse("protocol = olsr").unwrap_err().field, "protocol");
        assert_eq!(ScenarioConfig::parse("nodes = many").unwrap_err().field, "nodes");
        assert_eq!(ScenarioConfig::parse("colour = blue").unwrap_err().field, "colour");
        assert_eq!(ScenarioConfig::parse("sim_time = 40").unwrap_err().field, "sim_time");
        assert!(ScenarioConfig::parse("just words").is_err());
    }

    #[test]
    fn comments_and_blank_lines() {
        let c = ScenarioConfig::parse("# header\n\nprotocol = mod-dsr  # trailing\nnodes=50\n").unwrap();
        assert_eq!(c.protocol, ProtocolKind::ModDsr);
        assert_eq!(c.nodes, 50);
        assert_eq!(c.dsr().cache_capacity, 256);
    }

    #[test]
    fn presets_follow_protocol_variant() {
        let mut c = ScenarioConfig {
            protocol: ProtocolKind::ModAodv,
            ..Default::default()
        };
        assert_eq!((c.aodv().ttl_start, c.aodv().ttl_increment, c.aodv().ttl_threshold), (2, 4, 9));
        c.protocol = ProtocolKind::ModFsr;
        assert_eq!((c.fsr().inner_interval, c.fsr().outer_interval), (1.0, 3.0));
        c.fsr_outer_interval = Some(10.0);
        assert_eq!(c.fsr().outer_interval, 10.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn config() -> impl Strategy<Value = ScenarioConfig> {
            (
                prop::sample::select(ProtocolKind::ALL.to_vec()),
                prop::sample::select(vec![MacPreset::Dot11, MacPreset::Dot11p, MacPreset::Ideal]),
                2usize..200,
                0.1f64..40.0,
                any::<u64>(),
                60.0f64..2000.0,
                prop::option::of(1u32..5),
                prop::option::of(0.5f64..8.0),
                prop::option::of(any::<bool>()),
            )
                .prop_map(|(protocol, mac, nodes, speed, seed, sim_time, ttl, m, hello)| ScenarioConfig {
                    protocol,
                    mac,
                    nodes,
                    speed,
                    seed,
                    sim_time,
                    flows: nodes.min(10),
                    aodv_ttl_start: ttl,
                    nakagami_m: m,
                    aodv_hello: hello,
                    ..Default::default()
                })
        }

        proptest! {
            #[test]
            fn emit_parse_round_trip(c in config()) {
                let text = c.emit();
                let back = ScenarioConfig::parse(&text).unwrap();
                prop_assert_eq!(&back, &c);
                prop_assert_eq!(back.emit(), text);
            }
        }
    }
}
