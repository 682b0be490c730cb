//! Result, summary and plot-data files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::OutputError;
use crate::radio::MacPreset;
use crate::scenario::{LedgerDump, ResultRow};
use crate::sweep::{Metric, SummaryRow};

pub const RESULTS_HEADER: [&str; 13] = [
    "scenario_id",
    "protocol",
    "mac",
    "nodes",
    "speed_mps",
    "seed",
    "sim_time_s",
    "data_sent",
    "data_delivered",
    "pdr",
    "throughput_bps",
    "e2ed_ms",
    "nrl",
];

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn result_record(r: &ResultRow) -> [String; 13] {
    [
        r.scenario_id.clone(),
        r.protocol.name().to_string(),
        r.mac.name().to_string(),
        r.nodes.to_string(),
        r.speed_mps.to_string(),
        r.seed.to_string(),
        r.sim_time_s.to_string(),
        r.data_sent.to_string(),
        r.data_delivered.to_string(),
        opt(r.pdr),
        r.throughput_bps.to_string(),
        opt(r.e2ed_ms),
        opt(r.nrl),
    ]
}

/// Header plus one line per row. Undefined metrics are empty fields.
pub fn write_results<W: Write>(out: W, rows: &[ResultRow]) -> Result<(), OutputError> {
    if rows.is_empty() {
        return Err(OutputError::Empty);
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for r in rows {
        w.write_record(result_record(r))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_summary<W: Write>(out: W, summary: &[SummaryRow]) -> Result<(), OutputError> {
    if summary.is_empty() {
        return Err(OutputError::Empty);
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["protocol", "mac", "nodes", "speed_mps", "reps", "failed"]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    for m in Metric::ALL {
        header.push(format!("{}_mean", m.name()));
        header.push(format!("{}_stderr", m.name()));
    }
    w.write_record(&header)?;
    for s in summary {
        let mut rec = vec![
            s.protocol.name().to_string(),
            s.mac.name().to_string(),
            s.nodes.to_string(),
            s.speed_mps.to_string(),
            s.reps.to_string(),
            s.failed.to_string(),
        ];
        for st in s.stats {
            rec.push(opt(st.mean));
            rec.push(opt(st.stderr));
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Panel {
    /// 802.11, x = nodes.
    A,
    /// 802.11, x = speed.
    B,
    /// 802.11p, x = nodes.
    C,
    /// 802.11p, x = speed.
    D,
}

impl Panel {
    pub fn label(self) -> &'static str {
        match self {
            Panel::A => "a",
            Panel::B => "b",
            Panel::C => "c",
            Panel::D => "d",
        }
    }

    pub fn network(self) -> &'static str {
        match self {
            Panel::A | Panel::B => "MANET",
            Panel::C | Panel::D => "VANET",
        }
    }

    pub fn axis(self) -> &'static str {
        match self {
            Panel::A | Panel::C => "nodes",
            Panel::B | Panel::D => "speed_mps",
        }
    }

    fn of(mac: MacPreset) -> Option<[Panel; 2]> {
        match mac {
            MacPreset::Dot11 => Some([Panel::A, Panel::B]),
            MacPreset::Dot11p => Some([Panel::C, Panel::D]),
            MacPreset::Ideal => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotPoint {
    pub panel: Panel,
    pub metric: Metric,
    pub protocol: String,
    pub x: f64,
    pub mean: Option<f64>,
    pub stderr: Option<f64>,
}

/// Scalability panels hold speed at its smallest swept value, mobility
/// panels hold the node count at its smallest swept value.
pub fn plot_points(summary: &[SummaryRow]) -> Vec<PlotPoint> {
    let mut pts = vec![];
    for mac in [MacPreset::Dot11, MacPreset::Dot11p] {
        let cells: Vec<&SummaryRow> = summary.iter().filter(|s| s.mac == mac).collect();
        let Some(ref_speed) = cells.iter().map(|s| s.speed_mps).min_by(f64::total_cmp) else {
            continue;
        };
        let ref_nodes = cells.iter().map(|s| s.nodes).min().expect("non-empty");
        let [scal, mob] = Panel::of(mac).expect("real MAC");
        for s in &cells {
            for (panel, x, on) in [
                (scal, s.nodes as f64, s.speed_mps == ref_speed),
                (mob, s.speed_mps, s.nodes == ref_nodes),
            ] {
                if !on {
                    continue;
                }
                for m in Metric::ALL {
                    let st = s.stat(m);
                    pts.push(PlotPoint {
                        panel,
                        metric: m,
                        protocol: s.protocol.name().to_string(),
                        x,
                        mean: st.mean,
                        stderr: st.stderr,
                    });
                }
            }
        }
    }
    pts.sort_by(|a, b| {
        (a.panel, a.metric, &a.protocol)
            .cmp(&(b.panel, b.metric, &b.protocol))
            .then(a.x.total_cmp(&b.x))
    });
    pts
}

/// Long format: one line per (panel, metric, protocol, x).
pub fn write_plot_data<W: Write>(out: W, summary: &[SummaryRow]) -> Result<(), OutputError> {
    let pts = plot_points(summary);
    if pts.is_empty() {
        return Err(OutputError::Empty);
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["panel", "network", "axis", "metric", "protocol", "x", "mean", "stderr"])?;
    for p in pts {
        w.write_record([
            p.panel.label().to_string(),
            p.panel.network().to_string(),
            p.panel.axis().to_string(),
            p.metric.name().to_string(),
            p.protocol,
            p.x.to_string(),
            opt(p.mean),
            opt(p.stderr),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Creates `dir` if needed and proves it accepts files, so a bad path fails
/// before any simulation runs.
pub fn prepare_dir(dir: &Path) -> Result<(), OutputError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let probe = dir.join(".adhocsim-probe");
    fs::write(&probe, b"").map_err(io_err(&probe))?;
    fs::remove_file(&probe).map_err(io_err(&probe))?;
    Ok(())
}

pub fn create(path: &Path) -> Result<fs::File, OutputError> {
    fs::File::create(path).map_err(io_err(path))
}

pub fn write_ledger_dump(path: &Path, dump: &LedgerDump) -> Result<(), OutputError> {
    let json = serde_json::to_string_pretty(dump).expect("ledger serializes");
    fs::write(path, json).map_err(io_err(path))
}

pub fn read_ledger_dump(path: &Path) -> Result<LedgerDump, OutputError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| OutputError::Io {
        path: path.display().to_string(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
    })
}

/// File names used inside an output directory.
pub struct OutputFiles {
    pub results: PathBuf,
    pub summary: PathBuf,
    pub plot_data: PathBuf,
    pub config: PathBuf,
    pub ledger: PathBuf,
}

impl OutputFiles {
    pub fn in_dir(dir: &Path) -> Self {
        OutputFiles {
            results: dir.join("results.csv"),
            summary: dir.join("summary.csv"),
            plot_data: dir.join("plot_data.csv"),
            config: dir.join("config.conf"),
            ledger: dir.join("ledger.json"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricsLedger;
    use crate::routing::ProtocolKind;
    use crate::scenario::ScenarioConfig;
    use crate::sweep::summarize;

    fn row(p: ProtocolKind, mac: MacPreset, nodes: usize, speed: f64) -> ResultRow {
        let cfg = ScenarioConfig {
            protocol: p,
            mac,
            nodes,
            speed,
            ..Default::default()
        };
        let mut l = MetricsLedger::new(0.0);
        l.data_sent = 10;
        l.data_delivered = 5;
        ResultRow::from_ledger(&cfg, &l)
    }

    #[test]
    fn one_row_is_two_lines() {
        let mut buf = vec![];
        write_results(&mut buf, &[row(ProtocolKind::Aodv, MacPreset::Dot11, 25, 2.0)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[0],
            "scenario_id,protocol,mac,nodes,speed_mps,seed,sim_time_s,data_sent,data_delivered,pdr,throughput_bps,e2ed_ms,nrl"
        );
        // no latency records, so e2ed is absent
        assert_eq!(lines[1], "aodv_80211_n25_v2_s1,aodv,80211,25,2,1,900,10,5,0.5,0,,0");
    }

    #[test]
    fn empty_rows_rejected() {
        assert!(matches!(write_results(Vec::new(), &[]), Err(OutputError::Empty)));
    }

    #[test]
    fn panels_group_one_series_per_protocol() {
        let mut rows = vec![];
        for p in [ProtocolKind::Aodv, ProtocolKind::Fsr] {
            for mac in [MacPreset::Dot11, MacPreset::Dot11p] {
                for n in [25, 50] {
                    for v in [2.0, 30.0] {
                        rows.push(row(p, mac, n, v));
                    }
                }
            }
        }
        rows.sort_by(crate::sweep::row_order);
        let pts = plot_points(&summarize(&rows));
        for panel in [Panel::A, Panel::B, Panel::C, Panel::D] {
            let series: std::collections::BTreeSet<_> = pts
                .iter()
                .filter(|p| p.panel == panel && p.metric == Metric::Nrl)
                .map(|p| p.protocol.clone())
                .collect();
            assert_eq!(series.len(), 2);
            let xs: Vec<f64> = pts
                .iter()
                .filter(|p| p.panel == panel && p.metric == Metric::Nrl && p.protocol == "aodv")
                .map(|p| p.x)
                .collect();
            match panel.axis() {
                "nodes" => assert_eq!(xs, vec![25.0, 50.0]),
                _ => assert_eq!(xs, vec![2.0, 30.0]),
            }
        }
    }

    #[test]
    fn unwritable_dir_fails() {
        let f = tempfile::NamedTempFile::new().unwrap();
        assert!(prepare_dir(&f.path().join("sub")).is_err());
    }
}
