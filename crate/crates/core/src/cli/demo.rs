use clap::{Args, ValueEnum};

use super::CliError;
use crate::objectives::{Benchmark, ObjectiveSpec};
use crate::runtime::{train, AgentConfig, Algorithm};

/// Agents the demo knows about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DemoAgent {
    Es,
    Adames,
}

#[derive(Debug, Clone, Args)]
pub struct DemoArgs {
    #[arg(long, value_enum)]
    pub agent: DemoAgent,
}

pub const DEMO_DIM: usize = 2;
pub const DEMO_ITERATIONS: usize = 50;
pub const DEMO_INIT_RANGE: f64 = 2.0;
pub const DEMO_PASS_BELOW: f64 = 0.5;

pub fn demo_config(agent: DemoAgent) -> AgentConfig {
    let algorithm = match agent {
        DemoAgent::Es => Algorithm::Es,
        DemoAgent::Adames => Algorithm::Adames,
    };
    let mut config = AgentConfig::benchmark(
        ObjectiveSpec::benchmark(Benchmark::Sphere, DEMO_DIM),
        algorithm,
        DEMO_ITERATIONS,
        0,
    );
    config.init_range = DEMO_INIT_RANGE;
    config
}

/// Final sphere value at the global parameters.
pub fn run_demo(agent: DemoAgent) -> Result<f64, CliError> {
    let run = train(&demo_config(agent), &mut [])?;
    Ok(run
        .history
        .last()
        .and_then(|h| h.global_value)
        .expect("static objective reports its value"))
}

pub fn cmd_demo(args: &DemoArgs, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let value = run_demo(args.agent)?;
    writeln!(
        out,
        "{:?} on sphere (d={DEMO_DIM}, {DEMO_ITERATIONS} iterations): final value {value:.6}, fitness {:.6}",
        args.agent, -value
    )?;
    if value < DEMO_PASS_BELOW {
        writeln!(out, "PASS")?;
        Ok(())
    } else {
        writeln!(out, "FAIL")?;
        Err(CliError::Runtime(format!(
            "demo did not reach sphere value below {DEMO_PASS_BELOW}"
        )))
    }
}
