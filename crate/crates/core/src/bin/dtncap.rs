use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dtncap::bounds::{upper_bound_speed, write_bounds_csv, BoundQuery};
use dtncap::contacts::contact_stream;
use dtncap::dissemination::{write_journeys_csv, RendezvousSettings};
use dtncap::harness::{rendezvous_batch, render_plots, run_experiment, sweep_capacity, ExperimentSpec, RendezvousBatch};
use dtncap::meetings::{empirical_meeting_stats, write_meetings_csv};
use dtncap::scenario::parse_list;
use dtncap::{build_scenario, Error, RawConfig, Result};

#[derive(Parser)]
#[command(name = "dtncap", version, about = "Space-time capacity of mobile delay-tolerant networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replicated capacity-constrained broadcasts; writes informed CSVs, samples.csv, manifest.json.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also write contacts.csv and trajectories.csv for replication 0.
        #[arg(long)]
        dump_contacts: bool,
    },
    /// Upper bound on propagation speed for each capacity; writes bounds.csv.
    Bounds {
        #[command(flatten)]
        common: Common,
    },
    /// Meeting statistics of a simulated contact trace; writes meetings.csv.
    Meetings {
        #[command(flatten)]
        common: Common,
    },
    /// Measured speed and space-time capacity per capacity; writes speed.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        window: Window,
    },
    /// Seeded three-stage unicast runs; writes journeys.csv.
    Rendezvous {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        /// Minimum rendezvous distance in meters.
        #[arg(long, default_value_t = 500.0)]
        min_distance: f64,
        /// Capacity limit factor: y <= k R G / v.
        #[arg(long, default_value_t = 0.5)]
        k: f64,
    },
    /// Renders SVG figures from the CSVs found in a run directory.
    Plot {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

/// Shared scenario and run flags. Values given here override the config file;
/// anything still unset falls back to the 500-node, 600 m reference scenario.
#[derive(Args, Clone)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    nodes: Option<usize>,
    /// Side L of the square domain, meters.
    #[arg(long)]
    side: Option<f64>,
    /// Radio range R, meters.
    #[arg(long)]
    range: Option<f64>,
    /// Node speed v, m/s.
    #[arg(long)]
    speed: Option<f64>,
    /// Direction-change rate, 1/s (0 = billiard).
    #[arg(long)]
    tau: Option<f64>,
    /// Link rate G, data units per second.
    #[arg(long)]
    rate: Option<f64>,
    /// Journey capacity or comma-separated list.
    #[arg(long)]
    capacity: Option<String>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    source_time: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct Window {
    /// Lower end of the distance window for the speed fit (default L/6).
    #[arg(long)]
    fit_min: Option<f64>,
    /// Upper end of the distance window (default L/2).
    #[arg(long)]
    fit_max: Option<f64>,
}

fn reference_defaults() -> RawConfig {
    RawConfig {
        nodes: Some(500),
        side: Some(600.0),
        range: Some(10.0),
        speed: Some(5.0),
        tau: Some(0.0),
        rate: Some(1.0),
        seed: Some(1),
        horizon: Some(250.0),
        capacity: Some(vec![1.0, 2.0, 3.0]),
        source_time: Some(50.0),
        replications: Some(10),
        out_dir: Some(PathBuf::from("out")),
    }
}

impl Common {
    fn resolve(&self) -> Result<RawConfig> {
        let file = match &self.config {
            Some(path) => RawConfig::from_file(path)?,
            None => RawConfig::default(),
        };
        let cli = RawConfig {
            nodes: self.nodes,
            side: self.side,
            range: self.range,
            speed: self.speed,
            tau: self.tau,
            rate: self.rate,
            seed: self.seed,
            horizon: self.horizon,
            capacity: self.capacity.as_deref().map(parse_list).transpose().map_err(Error::Validation)?,
            source_time: self.source_time,
            replications: self.replications,
            out_dir: self.out.clone(),
        };
        Ok(reference_defaults().overridden_by(&file).overridden_by(&cli))
    }
}

fn out_dir(raw: &RawConfig) -> Result<PathBuf> {
    let dir = raw.out_dir.clone().expect("defaulted");
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn experiment(raw: &RawConfig) -> Result<ExperimentSpec> {
    let scenario = build_scenario(raw)?;
    let mut spec = ExperimentSpec::new(
        scenario,
        raw.capacity.clone().expect("defaulted"),
        raw.source_time.expect("defaulted"),
        raw.horizon.expect("defaulted"),
        raw.replications.expect("defaulted"),
        raw.seed.expect("defaulted"),
    );
    spec.out_dir = raw.out_dir.clone();
    Ok(spec)
}

fn report(path: &Path) {
    println!("wrote {}", path.display());
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { common, dump_contacts } => {
            let raw = common.resolve()?;
            let spec = experiment(&raw)?;
            let bundle = run_experiment(&spec)?;
            let dir = out_dir(&raw)?;
            if dump_contacts {
                let trace = contact_stream(&spec.scenario, spec.horizon, spec.seed, 0);
                trace.stream.write_csv(fs::File::create(dir.join("contacts.csv"))?)?;
                dtncap::mobility::write_trajectory_csv(&trace.trajectories, spec.horizon, fs::File::create(dir.join("trajectories.csv"))?)?;
            }
            for run in &bundle.runs {
                println!(
                    "replication {} y {}: {} of {} nodes informed",
                    run.replication,
                    run.capacity_y,
                    run.log.informed_count(),
                    run.log.n()
                );
            }
            report(&dir);
        }
        Command::Bounds { common } => {
            let raw = common.resolve()?;
            let scenario = build_scenario(&raw)?;
            let rows = raw
                .capacity
                .as_ref()
                .expect("defaulted")
                .iter()
                .map(|&y| BoundQuery::new(scenario, y).map(|q| upper_bound_speed(&q)))
                .collect::<Result<Vec<_>>>()?;
            let path = out_dir(&raw)?.join("bounds.csv");
            write_bounds_csv(&rows, fs::File::create(&path)?)?;
            write_bounds_csv(&rows, std::io::stdout())?;
            report(&path);
        }
        Command::Meetings { common } => {
            let raw = common.resolve()?;
            let scenario = build_scenario(&raw)?;
            let horizon = raw.horizon.expect("defaulted");
            let trace = contact_stream(&scenario, horizon, raw.seed.expect("defaulted"), 0);
            let stats = empirical_meeting_stats(&trace.stream, &scenario)?;
            let scale = scenario.range() / scenario.speed().max(f64::MIN_POSITIVE);
            let ts: Vec<f64> = (1..=200).map(|i| i as f64 * 0.05 * scale).collect();
            let path = out_dir(&raw)?.join("meetings.csv");
            write_meetings_csv(&ts, &scenario, Some(&stats), fs::File::create(&path)?)?;
            println!("{}", serde_json::to_string_pretty(&stats)?);
            report(&path);
        }
        Command::Sweep { common, window } => {
            let raw = common.resolve()?;
            let mut spec = experiment(&raw)?;
            if let Some(lo) = window.fit_min {
                spec.fit_window.0 = lo;
            }
            if let Some(hi) = window.fit_max {
                spec.fit_window.1 = hi;
            }
            out_dir(&raw)?;
            let (_, rows) = sweep_capacity(&spec)?;
            for r in &rows {
                println!(
                    "y {}: slope speed {:.4} m/s, frontier speed {:.4} m/s, bound {:.4} m/s, c(y) {:.4}",
                    r.estimate.capacity_y, r.estimate.speed_slope, r.estimate.speed_frontier, r.speed_upper_bound, r.capacity_product
                );
            }
            report(&raw.out_dir.expect("defaulted").join("speed.csv"));
        }
        Command::Rendezvous {
            common,
            runs,
            min_distance,
            k,
        } => {
            let raw = common.resolve()?;
            let scenario = build_scenario(&raw)?;
            let capacities = raw.capacity.clone().expect("defaulted");
            let &[y] = capacities.as_slice() else {
                return Err(Error::Validation("rendezvous takes exactly one capacity".into()));
            };
            let mut batch = RendezvousBatch::new(scenario, y, runs, raw.seed.expect("defaulted"), min_distance);
            batch.settings = RendezvousSettings { k };
            let records = rendezvous_batch(&batch)?;
            let delivered = records.iter().filter(|r| r.outcome.delivered).count();
            println!("{delivered} of {} runs delivered", records.len());
            let path = out_dir(&raw)?.join("journeys.csv");
            write_journeys_csv(&records, fs::File::create(&path)?)?;
            report(&path);
        }
        Command::Plot { out } => {
            for path in render_plots(&out)? {
                report(&path);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
