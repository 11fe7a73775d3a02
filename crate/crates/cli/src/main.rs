//! `hiddenosc` command-line front end.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{RunConfig, Task};

/// Global stability certificates and hidden oscillations in piecewise-smooth systems.
#[derive(Debug, Parser)]
#[command(name = "hiddenosc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate trajectories from the configured starts.
    Simulate(Common),
    /// Check the stability theorem hypotheses for the model's certificate.
    Verify(Common),
    /// Locate and classify limit cycles on a Poincaré section.
    Cycles(Common),
    /// Compare harmonic balance with simulated cycles (Keldysh model).
    Hb(Common),
    /// Sweep Keldysh parameters over a 1D or 2D grid.
    Sweep(Common),
    /// Render a phase portrait from trajectory and cycle files.
    Plot(Common),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the seeds in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
}

/// Error with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn config(error: impl Into<anyhow::Error>) -> Self {
        Self { code: 1, error: error.into() }
    }

    pub fn internal(error: impl Into<anyhow::Error>) -> Self {
        Self { code: 4, error: error.into() }
    }
}

impl From<hiddenosc::Error> for Failure {
    fn from(e: hiddenosc::Error) -> Self {
        use hiddenosc::Error as E;
        match e {
            E::InvalidParameter { .. }
            | E::DimensionMismatch { .. }
            | E::NoSurface
            | E::EmptyStationarySet
            | E::MissingPeriodicCoordinate
            | E::NotOnSurface(_)
            | E::Parse(_) => Failure::config(e),
            _ => Failure::internal(e),
        }
    }
}

fn run(task: Task, common: &Common) -> Result<u8, Failure> {
    if common.workers == Some(0) {
        return Err(Failure::config(anyhow::anyhow!("--workers must be at least 1")));
    }
    let mut cfg = RunConfig::load(&common.config).map_err(Failure::config)?;
    if let Some(t) = cfg.task {
        if t != task {
            return Err(Failure::config(anyhow::anyhow!(
                "config task `{}` does not match subcommand `{}`",
                t.as_str(),
                task.as_str()
            )));
        }
    }
    if let Some(seed) = common.seed {
        cfg.integrator.seed = seed;
        if let Some(p) = cfg.verify.probe.as_mut() {
            p.seed = seed;
        }
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = common.workers {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(Failure::internal)?;
    let base = common.config.parent().map(|p| p.to_path_buf()).unwrap_or_default();
    pool.install(|| commands::execute(task, &cfg, &base, &common.out))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (task, common) = match &cli.command {
        Command::Simulate(c) => (Task::Simulate, c),
        Command::Verify(c) => (Task::Verify, c),
        Command::Cycles(c) => (Task::Cycles, c),
        Command::Hb(c) => (Task::Hb, c),
        Command::Sweep(c) => (Task::Sweep, c),
        Command::Plot(c) => (Task::Plot, c),
    };
    match run(task, common) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
