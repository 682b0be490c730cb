use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adhocsim::analytics::{
    link_duration, occupancy_curve, validate_occupancy, FitStatus, Heading, KinematicPair, OccupancyExperiment,
};
use adhocsim::error::{AnalyticsError, ConfigError};
use adhocsim::output::{self, OutputFiles};
use adhocsim::scenario::{run_scenario, LedgerDump, RowStatus, ScenarioConfig};
use adhocsim::sweep::{run_sweep, SweepSpec};
use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "adhocsim", version, about = "Ad hoc routing simulator and sweep harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and print (or write) its result row.
    Run(RunArgs),
    /// Run a protocol x MAC x nodes x speed grid with replications.
    Sweep(SweepArgs),
    /// Write closed-form occupancy and link-duration curves.
    Analytics(AnalyticsArgs),
    /// Check highway occupancy against the Poisson model, or audit a run.
    Validate(ValidateArgs),
}

/// Settings shared by `run` and `sweep`. On `sweep`, the first four accept
/// comma-separated lists.
#[derive(Args, Clone, Default)]
struct Overrides {
    #[arg(long)]
    protocol: Option<String>,
    #[arg(long)]
    mac: Option<String>,
    #[arg(long)]
    nodes: Option<String>,
    #[arg(long)]
    speed: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    sim_time: Option<String>,
    #[arg(long)]
    flows: Option<String>,
    #[arg(long)]
    reps: Option<String>,
    /// Flat `key = value` file; command-line flags win over it.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Overrides {
    fn pairs(&self) -> Vec<(&'static str, &String)> {
        [
            ("protocol", &self.protocol),
            ("mac", &self.mac),
            ("nodes", &self.nodes),
            ("speed", &self.speed),
            ("seed", &self.seed),
            ("sim_time", &self.sim_time),
            ("flows", &self.flows),
            ("reps", &self.reps),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k, v)))
        .collect()
    }

    /// Config file text with the flags appended, so later keys override.
    fn merged_text(&self) -> anyhow::Result<String> {
        let mut text = match &self.config {
            Some(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
            None => String::new(),
        };
        text.push('\n');
        for (k, v) in self.pairs() {
            text.push_str(&format!("{k} = {v}\n"));
        }
        Ok(text)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    set: Overrides,
    /// Directory for results.csv, config.conf and ledger.json.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    set: Overrides,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    workers: Option<usize>,
    /// Simulate the full 900 s instead of the file's duration.
    #[arg(long)]
    full_scale: bool,
}

#[derive(Args)]
struct AnalyticsArgs {
    #[arg(long, default_value = "analytics")]
    out: PathBuf,
    /// Segment length in metres for the occupancy curve.
    #[arg(long, default_value_t = 400.0)]
    segment: f64,
    /// Radio range in metres for link durations.
    #[arg(long, default_value_t = 250.0)]
    range: f64,
}

#[derive(Args)]
struct ValidateArgs {
    /// Use an equally spaced convoy instead of Poisson arrivals; the fit is
    /// expected to fail.
    #[arg(long)]
    convoy: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Audit a `run --out` directory: recompute its row from ledger.json.
    #[arg(long)]
    ledger: Option<PathBuf>,
}

/// Exit statuses: 0 success, 1 runtime or validation failure, 2 bad input.
fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Analytics(a) => analytics(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let config = e.downcast_ref::<ConfigError>().is_some()
                || matches!(e.downcast_ref::<AnalyticsError>(), Some(AnalyticsError::Config(_)));
            ExitCode::from(if config { 2 } else { 1 })
        }
    }
}

fn run(a: RunArgs) -> anyhow::Result<ExitCode> {
    let spec = SweepSpec::parse(&a.set.merged_text()?)?;
    if spec.cells().len() != spec.reps as usize {
        return Err(ConfigError::new("protocol", "`run` takes single values; use `sweep` for lists").into());
    }
    if let Some(dir) = &a.out {
        output::prepare_dir(dir)?;
    }
    let cfg: ScenarioConfig = spec.cells().swap_remove(0);
    let (rows, dump) = if spec.reps == 1 {
        let out = run_scenario(&cfg)?;
        let dump = LedgerDump {
            config: cfg,
            ledger: out.ledger,
        };
        (vec![out.row], Some(dump))
    } else {
        (run_sweep(&spec, a.workers)?.rows, None)
    };
    match &a.out {
        Some(dir) => {
            let files = OutputFiles::in_dir(dir);
            output::write_results(output::create(&files.results)?, &rows)?;
            let conf = dump.as_ref().map_or_else(|| spec.emit(), |d| d.config.emit());
            fs::write(&files.config, conf).with_context(|| files.config.display().to_string())?;
            if let Some(d) = &dump {
                output::write_ledger_dump(&files.ledger, d)?;
            }
        }
        None => output::write_results(std::io::stdout().lock(), &rows)?,
    }
    Ok(status_of(&rows))
}

fn status_of(rows: &[adhocsim::scenario::ResultRow]) -> ExitCode {
    let mut failed = 0;
    for r in rows {
        if let RowStatus::Failed(why) = &r.status {
            eprintln!("{} failed: {why}", r.scenario_id);
            failed += 1;
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn sweep(a: SweepArgs) -> anyhow::Result<ExitCode> {
    let mut text = a.set.merged_text()?;
    if a.full_scale {
        text.push_str("sim_time = 900\n");
    }
    let spec = SweepSpec::parse(&text)?;
    let workers = a
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    output::prepare_dir(&a.out)?;
    let files = OutputFiles::in_dir(&a.out);
    fs::write(&files.config, spec.emit()).with_context(|| files.config.display().to_string())?;
    eprintln!("running {} scenarios on {workers} workers", spec.cells().len());
    let res = run_sweep(&spec, workers)?;
    output::write_results(output::create(&files.results)?, &res.rows)?;
    output::write_summary(output::create(&files.summary)?, &res.summary)?;
    if spec.macs.iter().any(|m| m.name() != "ideal") {
        output::write_plot_data(output::create(&files.plot_data)?, &res.summary)?;
    }
    eprintln!("wrote {}", a.out.display());
    Ok(status_of(&res.rows))
}

fn analytics(a: AnalyticsArgs) -> anyhow::Result<ExitCode> {
    output::prepare_dir(&a.out)?;
    let densities: Vec<f64> = (0..=40).map(|k| f64::from(k) * 0.5).collect();
    let curve = occupancy_curve(&densities, a.segment)?;
    let mut w = output::create(&a.out.join("occupancy.csv"))?;
    writeln!(w, "density_per_km,seg_length_m,phi,p_empty,p_nonempty")?;
    for p in curve {
        writeln!(w, "{},{},{},{},{}", p.density_per_km, p.seg_length, p.phi, p.p_empty, p.p_nonempty)?;
    }

    let speeds = [2.0, 7.0, 15.0, 20.0, 30.0];
    let mut w = output::create(&a.out.join("link_duration.csv"))?;
    writeln!(w, "v1_mps,v2_mps,heading,range_m,duration_s")?;
    for heading in [Heading::Same, Heading::Opposite] {
        for v1 in speeds {
            for v2 in speeds {
                let d = link_duration(KinematicPair {
                    v1,
                    v2,
                    heading,
                    range: a.range,
                })?;
                let label = match heading {
                    Heading::Same => "same",
                    Heading::Opposite => "opposite",
                };
                let secs = d.seconds().map_or_else(|| "inf".to_string(), |s| s.to_string());
                writeln!(w, "{v1},{v2},{label},{},{secs}", a.range)?;
            }
        }
    }
    eprintln!("wrote {}", a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn validate(a: ValidateArgs) -> anyhow::Result<ExitCode> {
    if let Some(dir) = &a.ledger {
        return audit(dir);
    }
    let exp = OccupancyExperiment {
        seed: a.seed,
        ..OccupancyExperiment::default()
    };
    let counts = if a.convoy {
        exp.convoy_counts()?
    } else {
        exp.poisson_counts()?
    };
    let r = validate_occupancy(&counts, exp.phi()?)?;
    println!("phi         {}", r.phi);
    println!("samples     {}", r.samples);
    println!("mean        {:.5} (tolerance ±{}%)", r.mean, 100.0 * adhocsim::analytics::MEAN_TOLERANCE);
    println!("var/mean    {:.5} (band {:?})", r.dispersion, adhocsim::analytics::DISPERSION_BAND);
    println!("chi-square  {:.3} on {} dof, p = {:.4}", r.chi_square, r.degrees_of_freedom, r.p_value);
    println!("status      {:?}", r.status);
    Ok(match r.status {
        FitStatus::Pass => ExitCode::SUCCESS,
        FitStatus::Fail | FitStatus::Inconclusive => ExitCode::from(1),
    })
}

fn audit(dir: &Path) -> anyhow::Result<ExitCode> {
    let files = OutputFiles::in_dir(dir);
    let dump = output::read_ledger_dump(&files.ledger)?;
    let mut fresh = vec![];
    output::write_results(&mut fresh, &[dump.recompute()])?;
    let saved = fs::read(&files.results).with_context(|| files.results.display().to_string())?;
    if fresh != saved {
        bail!("{} does not match the row recomputed from {}", files.results.display(), files.ledger.display());
    }
    println!("{}: row recomputes exactly from the ledger", files.results.display());
    Ok(ExitCode::SUCCESS)
}
