use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use adhocsim::scenario::ScenarioConfig;
use adhocsim::sweep::SweepSpec;

const HEADER: &str =
    "scenario_id,protocol,mac,nodes,speed_mps,seed,sim_time_s,data_sent,data_delivered,pdr,throughput_bps,e2ed_ms,nrl";

const SMALL: [&str; 6] = ["--nodes", "8", "--sim-time", "60", "--flows", "2"];

fn adhocsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adhocsim")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_prints_header_and_one_row() {
    let o = adhocsim(&[&["run", "--protocol", "mod-dsr", "--mac", "80211p", "--seed", "4"][..], &SMALL].concat());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], HEADER);
    assert!(lines[1].starts_with("mod-dsr_80211p_n8_v2_s4,mod-dsr,80211p,8,2,4,60,"), "{}", lines[1]);
    assert_eq!(lines[1].split(',').count(), 13);
}

#[test]
fn config_errors_exit_with_status_two() {
    for args in [
        &["run", "--protocol", "olsr"][..],
        &["run", "--nodes", "1"],
        &["run", "--speed", "fast"],
        &["run", "--sim-time", "10"],
        &["run", "--protocol", "aodv,dsr"],
        &["sweep", "--reps", "0"],
    ] {
        let o = adhocsim(args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).starts_with("error: "), "{args:?}");
    }
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    fs::write(&conf, "# typo below\ncolour = blue\n").unwrap();
    let o = adhocsim(&["run", "--config", path(&conf)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));
}

#[test]
fn unwritable_output_fails_before_simulating() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain-file");
    fs::write(&file, "").unwrap();
    let bad = file.join("out");
    // 900 s with 100 nodes would take far longer than the bound below
    let t = Instant::now();
    let o = adhocsim(&["run", "--nodes", "100", "--sim-time", "900", "--out", path(&bad)]);
    assert_eq!(code(&o), 1);
    assert!(t.elapsed() < Duration::from_secs(5));
    let o = adhocsim(&["sweep", "--nodes", "100", "--sim-time", "900", "--out", path(&bad)]);
    assert_eq!(code(&o), 1);
    assert!(!stderr(&o).contains("running"), "{}", stderr(&o));
    assert!(!bad.exists());
}

#[test]
fn written_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = adhocsim(&[&["run", "--protocol", "fsr", "--out", path(&a)][..], &SMALL].concat());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let conf = a.join("config.conf");
    let o = adhocsim(&["run", "--config", path(&conf), "--out", path(&b)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read(a.join("results.csv")).unwrap(), fs::read(b.join("results.csv")).unwrap());
    assert_eq!(fs::read(&conf).unwrap(), fs::read(b.join("config.conf")).unwrap());
    let text = fs::read_to_string(&conf).unwrap();
    let parsed = ScenarioConfig::parse(&text).unwrap();
    assert_eq!(parsed.emit(), text);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("c.conf");
    fs::write(&conf, "protocol = dsr\nnodes = 30\nsim_time = 60\nflows = 2\n").unwrap();
    let o = adhocsim(&["run", "--config", path(&conf), "--nodes", "6"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("dsr_80211_n6_"));
}

#[test]
fn sweep_output_does_not_depend_on_workers() {
    let dir = tempfile::tempdir().unwrap();
    let out = |w: &str| {
        let d = dir.path().join(format!("w{w}"));
        let o = adhocsim(&[
            "sweep", "--protocol", "aodv,fsr", "--mac", "80211,80211p", "--nodes", "6,8", "--speed", "2,10",
            "--sim-time", "55", "--flows", "2", "--reps", "2", "--workers", w, "--out", path(&d),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        d
    };
    let (one, two) = (out("1"), out("2"));
    for f in ["results.csv", "summary.csv", "plot_data.csv", "config.conf"] {
        assert_eq!(fs::read(one.join(f)).unwrap(), fs::read(two.join(f)).unwrap(), "{f}");
    }
    let results = fs::read_to_string(one.join("results.csv")).unwrap();
    assert_eq!(results.lines().next(), Some(HEADER));
    assert_eq!(results.lines().count(), 1 + 2 * 2 * 2 * 2 * 2);
    let plot = fs::read_to_string(one.join("plot_data.csv")).unwrap();
    for panel in ["a,MANET,nodes", "b,MANET,speed_mps", "c,VANET,nodes", "d,VANET,speed_mps"] {
        assert!(plot.lines().any(|l| l.starts_with(panel)), "{panel}");
    }
}

#[test]
fn shipped_sweep_file_is_the_full_grid() {
    let text = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../sweeps/full-grid.conf")).unwrap();
    let spec = SweepSpec::parse(&text).unwrap();
    assert_eq!(spec.cells().len(), 6 * 2 * 4 * 4 * 3);
    assert_eq!(spec.base.sim_time, 200.0);
    let full = SweepSpec::parse(&format!("{text}\nsim_time = 900\n")).unwrap();
    assert_eq!(full.base.sim_time, 900.0);
}

#[test]
fn validate_passes_poisson_and_rejects_convoy() {
    let o = adhocsim(&["validate"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("Pass"));
    let o = adhocsim(&["validate", "--convoy"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("Fail"));
}

#[test]
fn ledger_audit_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("run");
    let o = adhocsim(&[&["run", "--out", path(&d)][..], &SMALL].concat());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(code(&adhocsim(&["validate", "--ledger", path(&d)])), 0);
    let results = d.join("results.csv");
    let text = fs::read_to_string(&results).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut fields: Vec<&str> = lines[1].split(',').collect();
    fields[8] = "999999";
    lines[1] = fields.join(",");
    fs::write(&results, lines.join("\n") + "\n").unwrap();
    assert_eq!(code(&adhocsim(&["validate", "--ledger", path(&d)])), 1);
}

#[test]
fn analytics_writes_both_curves() {
    let dir = tempfile::tempdir().unwrap();
    let o = adhocsim(&["analytics", "--out", path(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let occ = fs::read_to_string(dir.path().join("occupancy.csv")).unwrap();
    assert_eq!(occ.lines().count(), 1 + 41);
    let link = fs::read_to_string(dir.path().join("link_duration.csv")).unwrap();
    assert!(link.lines().any(|l| l == "15,15,same,250,inf"));
    assert!(link.lines().any(|l| l == "15,15,opposite,250,16.666666666666668"));
}
