//! Command-line front-end.
//!
//! Exit codes: 0 on success, 2 for configuration and I/O problems, 3 when a
//! solver fails numerically, 4 when at least one sweep row failed.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::analysis::{quantum_sweep_with_ratio, resample_run, ErrorReport, Grid, SweepRow};
use crate::config::RunConfig;
use crate::machine::state_names;
use crate::qss::RunOutput;
use crate::reference::{run_reference, DenseTrajectory};
use crate::{Error, Result};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_SWEEP_ROW: u8 = 4;

/// Environment variable that caps the number of sweep worker threads.
pub const THREADS_ENV: &str = "LIQSS_THREADS";

#[derive(Debug, Parser)]
#[command(name = "liqss", version, about = "LIQSS1 simulation of a synchronous machine on an infinite bus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Forward Euler reference solution -> reference.csv
    RunReference(CommonArgs),
    /// LIQSS1 run -> liqss_events_<state>.csv, liqss_resampled.csv, updates.csv
    RunLiqss(CommonArgs),
    /// Both solvers and their comparison -> error_report.csv, summary.csv
    Compare(CommonArgs),
    /// Quantum-size study -> sweep.csv
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON configuration file; defaults are used when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Simulated horizon in seconds.
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Quantum of the fluxes and the angle; the speed gets a tenth of it
    /// unless --dq-speed is given.
    #[arg(long)]
    pub dq: Option<f64>,
    #[arg(long)]
    pub dq_speed: Option<f64>,
    /// Write the effective configuration to this path ("-" for stdout).
    #[arg(long)]
    pub dump_config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated quanta to sweep.
    #[arg(long, value_delimiter = ',', default_values_t = [1e-6, 1e-5, 1e-4, 1e-3, 1e-2])]
    pub dq_list: Vec<f64>,
    /// Speed quantum as a fraction of the swept quantum.
    #[arg(long, default_value_t = 0.1)]
    pub speed_ratio: f64,
}

impl CommonArgs {
    /// Loads the config file (or the defaults) and applies the flags on top.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(dir) = &self.out_dir {
            cfg.output_dir = dir.clone();
        }
        if let Some(t) = self.t_end {
            cfg.solver.t_end = t;
        }
        if let Some(dq) = self.dq {
            cfg.quanta.flux_dq = dq;
            cfg.quanta.angle_dq = dq;
            cfg.quanta.speed_dq = dq / 10.0;
        }
        if let Some(dq) = self.dq_speed {
            cfg.quanta.speed_dq = dq;
        }
        cfg.validate()?;
        if let Some(path) = &self.dump_config {
            let text = cfg.to_json()?;
            if path.as_os_str() == "-" {
                println!("{text}");
            } else {
                fs::write(path, text + "\n")?;
            }
        }
        Ok(cfg)
    }
}

/// Exit code for a failed command.
pub fn exit_code(err: &Error) -> u8 {
    if err.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// Runs one subcommand and returns its exit code.
pub fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::RunReference(args) => {
            let cfg = args.resolve()?;
            cmd_run_reference(&cfg)?;
        }
        Command::RunLiqss(args) => {
            let cfg = args.resolve()?;
            cmd_run_liqss(&cfg)?;
        }
        Command::Compare(args) => {
            let cfg = args.resolve()?;
            let report = cmd_compare(&cfg)?;
            println!("max_error {} total_updates {}", report.max_error, report.total_updates);
        }
        Command::Sweep(args) => {
            let cfg = args.common.resolve()?;
            let rows = cmd_sweep(&cfg, &args.dq_list, args.speed_ratio)?;
            for row in rows.iter().filter(|r| !r.is_ok()) {
                eprintln!("sweep row {} failed: {}", row.delta_q, row.error.as_deref().unwrap_or(""));
            }
            if rows.iter().any(|r| !r.is_ok()) {
                return Ok(EXIT_SWEEP_ROW);
            }
        }
    }
    Ok(EXIT_OK)
}

pub fn cmd_run_reference(cfg: &RunConfig) -> Result<DenseTrajectory> {
    let reference = run_reference(&cfg.scenario(), cfg.solver.euler_dt)?;
    let dir = output_dir(cfg)?;
    write_dense(&dir.join("reference.csv"), reference.t0, reference.dt, &reference.values)?;
    Ok(reference)
}

pub fn cmd_run_liqss(cfg: &RunConfig) -> Result<RunOutput> {
    let scenario = cfg.scenario();
    let run = scenario.simulator()?.run(scenario.t_end)?;
    let dir = output_dir(cfg)?;

    for (name, events) in run.names.iter().zip(&run.trajectories) {
        let rows = events.iter().map(|(t, q)| vec![fmt(t), fmt(q)]);
        write_csv(&dir.join(format!("liqss_events_{name}.csv")), &["t", "q"], rows)?;
    }

    let dt = cfg.solver.resample_dt;
    let grid = Grid {
        t0: 0.0,
        dt,
        count: (scenario.t_end / dt).round() as usize + 1,
    };
    let y = resample_run(&run, grid)?;
    write_dense(&dir.join("liqss_resampled.csv"), y.t0, y.dt, &y.values)?;

    let rows = run
        .names
        .iter()
        .zip(&run.update_counts)
        .map(|(name, &count)| vec![name.clone(), count.to_string(), fmt(count as f64 / scenario.t_end)]);
    write_csv(&dir.join("updates.csv"), &["state", "count", "intensity"], rows)?;
    Ok(run)
}

pub fn cmd_compare(cfg: &RunConfig) -> Result<ErrorReport> {
    let scenario = cfg.scenario();
    let reference = run_reference(&scenario, cfg.solver.euler_dt)?;
    let run = scenario.simulator()?.run(scenario.t_end)?;
    let report = ErrorReport::from_run(&run, &reference)?;
    write_report(&output_dir(cfg)?, &report)?;
    Ok(report)
}

/// Writes `error_report.csv` and `summary.csv`.
pub fn write_report(dir: &Path, report: &ErrorReport) -> Result<()> {
    let rows = (0..report.names.len()).map(|i| {
        vec![
            report.names[i].clone(),
            fmt(report.tane[i]),
            report.update_counts[i].to_string(),
            fmt(report.intensity[i]),
        ]
    });
    write_csv(&dir.join("error_report.csv"), &["state", "tane", "count", "intensity"], rows)?;
    let summary = [vec![fmt(report.max_error), report.total_updates.to_string()]];
    write_csv(&dir.join("summary.csv"), &["max_error", "total_updates"], summary)
}

pub fn cmd_sweep(cfg: &RunConfig, dq_list: &[f64], speed_ratio: f64) -> Result<Vec<SweepRow>> {
    if !(speed_ratio > 0.0 && speed_ratio.is_finite()) {
        return Err(Error::Config(format!("speed ratio must be positive, got {speed_ratio}")));
    }
    let scenario = cfg.scenario();
    let dir = output_dir(cfg)?;
    let rows = match worker_threads()? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))?
            .install(|| quantum_sweep_with_ratio(&scenario, dq_list, speed_ratio, None))?,
        None => quantum_sweep_with_ratio(&scenario, dq_list, speed_ratio, None)?,
    };
    write_sweep(&dir, &rows)?;
    Ok(rows)
}

/// Writes `sweep.csv`; failed rows carry `NaN` metrics.
pub fn write_sweep(dir: &Path, rows: &[SweepRow]) -> Result<()> {
    let csv_rows = rows.iter().map(|r| {
        vec![
            fmt(r.delta_q),
            fmt(r.max_error),
            r.total_updates.map_or_else(|| "NaN".to_string(), |n| n.to_string()),
            fmt(r.wall_time),
        ]
    });
    write_csv(
        &dir.join("sweep.csv"),
        &["delta_q", "max_error", "total_updates", "wall_time_s"],
        csv_rows,
    )
}

fn worker_threads() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(None),
    }
}

fn output_dir(cfg: &RunConfig) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.output_dir)?;
    Ok(cfg.output_dir.clone())
}

/// Shortest decimal that parses back to the same value.
fn fmt(v: f64) -> String {
    format!("{v}")
}

fn write_dense(path: &Path, t0: f64, dt: f64, values: &[Vec<f64>]) -> Result<()> {
    let mut header = vec!["t".to_string()];
    header.extend(state_names());
    let len = values.first().map_or(0, Vec::len);
    let rows = (0..len).map(|k| {
        let mut row = Vec::with_capacity(values.len() + 1);
        row.push(fmt(t0 + k as f64 * dt));
        row.extend(values.iter().map(|v| fmt(v[k])));
        row
    });
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(path, &header, rows)
}

fn write_csv<R, I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}
