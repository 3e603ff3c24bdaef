use clap::{Args, ValueEnum};

use super::train::{run_into, unique_dir, TrainArgs};
use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    Lr,
    Sigma,
    PopSize,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Lr => "lr",
            SweepParam::Sigma => "sigma",
            SweepParam::PopSize => "pop-size",
        }
    }

    pub fn default_values(self) -> &'static str {
        match self {
            SweepParam::Lr => "0.01,0.05,0.1,0.5",
            SweepParam::Sigma => "0.1,0.5,1,2",
            SweepParam::PopSize => "5,10,50,100",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub param: SweepParam,
    /// Comma-separated values [default: lr 0.01,0.05,0.1,0.5; sigma 0.1,0.5,1,2; pop-size 5,10,50,100].
    #[arg(long)]
    pub values: Option<String>,
    #[command(flatten)]
    pub base: TrainArgs,
}

/// One resolved sweep point: the value as typed and the flags it yields.
pub fn sweep_points(args: &SweepArgs) -> Result<Vec<(String, TrainArgs)>, CliError> {
    let raw = args.values.as_deref().unwrap_or(args.param.default_values());
    let values: Vec<&str> = raw.split(',').map(str::trim).collect();
    if values.len() < 2 {
        return Err(CliError::Usage(format!("a sweep needs at least 2 values, got '{raw}'")));
    }
    values
        .into_iter()
        .map(|v| {
            let mut point = args.base.clone();
            let bad = || CliError::Usage(format!("cannot parse '{v}' as a {} value", args.param.as_str()));
            match args.param {
                SweepParam::Lr => point.lr = v.parse().map_err(|_| bad())?,
                SweepParam::Sigma => point.sigma = v.parse().map_err(|_| bad())?,
                SweepParam::PopSize => point.pop_size = v.parse().map_err(|_| bad())?,
            }
            Ok((v.to_owned(), point))
        })
        .collect()
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let points = sweep_points(args)?;
    // Validate every point before running any of them.
    let configs = points.iter().map(|(_, p)| p.resolve()).collect::<Result<Vec<_>, _>>()?;
    for ((value, point), config) in points.iter().zip(&configs) {
        let name = format!(
            "sweep-{}-{}-{}-{}",
            point.algo.as_str(),
            point.objective,
            args.param.as_str(),
            value
        );
        let run_dir = unique_dir(&point.log_dir, &name);
        let final_fitness = run_into(config, &run_dir, point.checkpoint_every)?;
        writeln!(out, "{}={value}: final fitness {final_fitness}", args.param.as_str())?;
        writeln!(out, "{}", run_dir.display())?;
    }
    Ok(())
}
