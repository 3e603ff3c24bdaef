//! The `adames` command line: `train`, `demo`, `sweep` and `plot`.
//!
//! Exit codes: 0 on success, 1 when a command fails at runtime, 2 for
//! usage errors (bad flags, invalid flag combinations).

mod demo;
mod plot;
mod sweep;
mod train;

use std::ffi::OsString;
use std::io::Write;

use clap::{Parser, Subcommand};

pub use demo::{demo_config, run_demo, DemoAgent, DemoArgs, DEMO_DIM, DEMO_ITERATIONS, DEMO_PASS_BELOW};
pub use plot::{cmd_plot, load_panels, moving_average, sidecar_csv, Curve, Panel, PlotMetric, PlotRequest, SaveType};
pub use sweep::{sweep_points, SweepArgs, SweepParam};
pub use train::{unique_dir, TrainArgs, DEFAULT_DIM};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "adames", version, about = "Evolution strategies with Adam-style updates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one run and write its run directory.
    Train(TrainArgs),
    /// Run a short preset on a 2-d sphere and report PASS or FAIL.
    Demo(DemoArgs),
    /// Train one run per value of a hyperparameter.
    Sweep(SweepArgs),
    /// Plot a metric from one or more run directories.
    Plot(PlotRequest),
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Parse `args` (program name first) and run the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Train(args) => train::cmd_train(args, out),
        Command::Demo(args) => demo::cmd_demo(args, out),
        Command::Sweep(args) => sweep::cmd_sweep(args, out),
        Command::Plot(req) => plot::cmd_plot(req, out).map(|_| ()),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if let CliError::Usage(_) = e {
                let _ = writeln!(err, "run with --help for usage");
            }
            e.exit_code()
        }
    }
}
