//! `aiez`: simulate walks, run the estimator variants and compare them.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 numerical failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;

use clap::{Parser, Subcommand, ValueEnum};

use aiez_core::config::RunConfig;
use aiez_core::io::{self, ImuLog};
use aiez_core::pipeline::{self, RunMetrics, TrajectoryPoint, Variant, VariantConfig};
use aiez_core::synth::Scenario;
use aiez_core::Error;

#[derive(Debug, Parser)]
#[command(name = "aiez", version, about = "Foot-mounted pedestrian dead reckoning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    /// 500 m rectangular loop with two hard-iron zones.
    Loop,
    /// 80 m corridor with a hard-iron zone from 30 m to 50 m.
    HardIron,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Iez,
    IezCqmd,
    Aiez,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Iez => Variant::Iez,
            VariantArg::IezCqmd => Variant::IezClassicalQmd,
            VariantArg::Aiez => Variant::Aiez,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a ground-truth walk and the matching IMU log.
    ///
    /// Writes truth.csv, imu.csv and config.toml (the resolved
    /// configuration, usable as --config for the other commands).
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Built-in scenario, replacing any [scenario] table of the config.
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        /// Overrides the gait and sensor seeds.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one estimator variant over an IMU log.
    ///
    /// Writes trajectory.csv, detectors.csv and, when the route length is
    /// known, metrics.csv.
    Run {
        #[arg(long, value_enum)]
        variant: Option<VariantArg>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Route length in metres for the TTD percentage.
        #[arg(long)]
        distance: Option<f64>,
    },
    /// Run all three variants and tabulate their loop-closure errors.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        distance: Option<f64>,
    },
    /// Write the stance and magnetic-field detector log of one run.
    Detect {
        #[arg(long, value_enum)]
        variant: Option<VariantArg>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        input: PathBuf,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 1,
        Error::EmptyStream
        | Error::NonMonotonicTime { .. }
        | Error::MissingMagnetometer { .. }
        | Error::Parse { .. }
        | Error::Io(_) => 2,
        Error::DegenerateAttitude { .. }
        | Error::DegenerateWindow
        | Error::WindowLength { .. }
        | Error::LowGravity { .. }
        | Error::UndefinedHeading
        | Error::NoMeasurement
        | Error::SingularInnovation => 3,
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Error> {
    path.map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
}

fn load_input(path: &Path) -> Result<ImuLog, Error> {
    let log = io::read_imu(path)?;
    if !log.gaps.is_empty() {
        let shown: Vec<String> = log.gaps.iter().take(5).map(|i| log.samples[*i].t.to_string()).collect();
        eprintln!(
            "warning: {} timing gap(s) longer than twice the nominal period, at t = {}{}",
            log.gaps.len(),
            shown.join(", "),
            if log.gaps.len() > 5 { ", ..." } else { "" }
        );
    }
    Ok(log)
}

fn create_dir(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

fn route_length(cfg: &RunConfig, flag: Option<f64>) -> Result<Option<f64>, Error> {
    match flag {
        Some(d) if !(d.is_finite() && d > 0.0) => Err(Error::Config(format!("--distance must be > 0, got {d}"))),
        Some(d) => Ok(Some(d)),
        None => Ok(cfg.total_distance()),
    }
}

fn run_variant(log: &ImuLog, cfg: &VariantConfig) -> Result<Vec<TrajectoryPoint>, Error> {
    if cfg.variant.uses_magnetometer() && !log.has_magnetometer() {
        return Err(Error::MissingMagnetometer {
            variant: cfg.variant.to_string(),
            index: 0,
        });
    }
    pipeline::run(&log.samples, cfg)
}

fn write_run(dir: &Path, traj: &[TrajectoryPoint]) -> Result<(), Error> {
    io::write_file(&dir.join("trajectory.csv"), |w| io::write_trajectory(w, traj))?;
    io::write_file(&dir.join("detectors.csv"), |w| io::write_detector_log(w, traj))
}

fn print_metrics(rows: &[(Variant, RunMetrics)]) {
    println!("{:<10} {:>18} {:>14}", "variant", "position_error_m", "ttd_error_pct");
    for (v, m) in rows {
        println!("{:<10} {:>18.3} {:>14.3}", v.name(), m.final_position_error, m.ttd_error_pct);
    }
}

fn simulate(config: Option<&Path>, preset: Option<Preset>, seed: Option<u64>, out: &Path) -> Result<(), Error> {
    let mut cfg = load_config(config)?;
    let seed_or = |default: u64| seed.unwrap_or(default);
    match preset {
        Some(Preset::Loop) => cfg.scenario = Some(Scenario::loop_walk(seed_or(0))),
        Some(Preset::HardIron) => cfg.scenario = Some(Scenario::hard_iron_corridor(80.0, 30.0, 50.0, seed_or(0))),
        None => {}
    }
    let scenario = cfg
        .scenario
        .as_mut()
        .ok_or_else(|| Error::Config("simulate needs a [scenario] table or --preset".into()))?;
    if let Some(s) = seed {
        scenario.gait.seed = s;
        scenario.sensor.seed = s;
    }
    cfg.estimator.initial_heading_deg = scenario.path.initial_heading_deg;
    cfg.estimator.gravity = scenario.gravity;
    if cfg.metrics.total_distance_m.is_none() {
        cfg.metrics.total_distance_m = Some(scenario.path.length());
    }
    let scenario = scenario.clone();
    cfg.validate()?;
    let sim = scenario.simulate()?;

    create_dir(out)?;
    io::write_file(&out.join("truth.csv"), |w| io::write_truth(w, &sim.truth))?;
    io::write_file(&out.join("imu.csv"), |w| io::write_imu(w, &sim.imu))?;
    fs::write(out.join("config.toml"), cfg.to_toml()).map_err(|e| Error::Io(e.to_string()))?;
    println!(
        "simulated {} samples, {} m, {} s -> {}",
        sim.imu.len(),
        sim.distance,
        sim.truth.last().map_or(0.0, |s| s.t),
        out.display()
    );
    Ok(())
}

fn run(
    variant: Option<VariantArg>,
    config: Option<&Path>,
    input: &Path,
    out: &Path,
    distance: Option<f64>,
) -> Result<(), Error> {
    let mut cfg = load_config(config)?;
    if let Some(v) = variant {
        cfg.estimator.variant = v.into();
    }
    let total = route_length(&cfg, distance)?;
    let log = load_input(input)?;
    let traj = run_variant(&log, &cfg.estimator)?;

    create_dir(out)?;
    write_run(out, &traj)?;
    match total {
        Some(d) => {
            let m = pipeline::metrics(&traj, d, &cfg.origin())?;
            let rows = [(cfg.estimator.variant, m)];
            io::write_file(&out.join("metrics.csv"), |w| io::write_metrics(w, &rows))?;
            print_metrics(&rows);
        }
        None => eprintln!("note: route length unknown, metrics.csv not written (use --distance)"),
    }
    Ok(())
}

fn compare(config: Option<&Path>, input: &Path, out: &Path, distance: Option<f64>) -> Result<(), Error> {
    let cfg = load_config(config)?;
    let total = route_length(&cfg, distance)?
        .ok_or_else(|| Error::Config("compare needs the route length (--distance or [metrics])".into()))?;
    let log = load_input(input)?;

    let results: Vec<Result<Vec<TrajectoryPoint>, Error>> = thread::scope(|s| {
        let handles: Vec<_> = Variant::ALL
            .iter()
            .map(|&variant| {
                let vc = VariantConfig {
                    variant,
                    ..cfg.estimator.clone()
                };
                let log = &log;
                s.spawn(move || run_variant(log, &vc))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("variant thread panicked")).collect()
    });

    create_dir(out)?;
    let mut rows = Vec::new();
    for (variant, traj) in Variant::ALL.into_iter().zip(results) {
        let traj = traj?;
        let dir = out.join(variant.name());
        create_dir(&dir)?;
        write_run(&dir, &traj)?;
        rows.push((variant, pipeline::metrics(&traj, total, &cfg.origin())?));
    }
    io::write_file(&out.join("metrics.csv"), |w| io::write_metrics(w, &rows))?;
    print_metrics(&rows);
    Ok(())
}

fn detect(variant: Option<VariantArg>, config: Option<&Path>, input: &Path, out: Option<&Path>) -> Result<(), Error> {
    let mut cfg = load_config(config)?;
    if let Some(v) = variant {
        cfg.estimator.variant = v.into();
    }
    if !cfg.estimator.variant.uses_magnetometer() {
        return Err(Error::Config(format!(
            "detect needs a magnetometer variant, got {}",
            cfg.estimator.variant
        )));
    }
    let log = load_input(input)?;
    let traj = run_variant(&log, &cfg.estimator)?;
    match out {
        Some(path) => io::write_file(path, |w| io::write_detect_log(w, &traj)),
        None => io::write_detect_log(std::io::stdout().lock(), &traj),
    }
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
    let result = match &cli.command {
        Command::Simulate { config, preset, seed, out } => simulate(config.as_deref(), *preset, *seed, out),
        Command::Run { variant, config, input, out, distance } => {
            run(*variant, config.as_deref(), input, out, *distance)
        }
        Command::Compare { config, input, out, distance } => compare(config.as_deref(), input, out, *distance),
        Command::Detect { variant, config, input, out } => detect(*variant, config.as_deref(), input, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
