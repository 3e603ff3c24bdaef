use std::path::{Path, PathBuf};

use clap::Args;

use super::CliError;
use crate::network::{param_count, Head, Model, NetworkSpec};
use crate::objectives::{Mode, ObjectiveName, ObjectiveSpec, ACT_DIM, OBS_DIM};
use crate::optimizer::{AdamEsConfig, EsConfig, FitnessShaping};
use crate::runtime::{train, AgentConfig, Algorithm, Callback, CheckpointCallback};

/// Flags shared by `train` and `sweep`.
#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum, default_value = "adames")]
    pub algo: Algorithm,
    #[arg(long, value_enum, default_value = "sphere")]
    pub objective: ObjectiveName,
    /// Problem dimension for static objectives.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, default_value_t = 200)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 10)]
    pub pop_size: usize,
    #[arg(long, default_value_t = 0.9)]
    pub beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    pub beta2: f64,
    #[arg(long, default_value = "runs")]
    pub log_dir: PathBuf,
    /// Half-width of the uniform initial mean [default: 5 static, 0.5 point_mass].
    #[arg(long)]
    pub init_range: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub actor_epochs: usize,
    /// Weight noise by raw returns instead of z-scored ones.
    #[arg(long)]
    pub raw_fitness: bool,
    /// Episode cap for point_mass.
    #[arg(long, default_value_t = 100)]
    pub max_steps: usize,
    /// Hidden layer widths of the point_mass policy, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "8")]
    pub hidden: Vec<usize>,
    /// Write the global parameters every k iterations.
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
}

pub const DEFAULT_DIM: usize = 10;

impl TrainArgs {
    /// Resolve flags into a validated config; `log_dir` is left unset.
    pub fn resolve(&self) -> Result<AgentConfig, CliError> {
        let (objective, model, default_range) = match self.objective.mode() {
            Mode::Static => {
                let dim = self.dim.unwrap_or(DEFAULT_DIM);
                let mut spec = ObjectiveSpec::benchmark(self.objective.benchmark().expect("static"), dim);
                spec.max_steps = None;
                (spec, Model::Dummy { dim }, 5.0)
            }
            Mode::Episodic => {
                if self.dim.is_some() {
                    return Err(CliError::Usage(
                        "--dim does not apply to point_mass; its dimension follows --hidden".into(),
                    ));
                }
                let torso = self.hidden.iter().copied().filter(|&w| w > 0).collect::<Vec<_>>();
                if torso.len() != self.hidden.len() {
                    return Err(CliError::Usage("--hidden widths must be positive".into()));
                }
                let net = NetworkSpec::new(OBS_DIM, torso, ACT_DIM).with_head(Head::TanhBounded);
                let model = Model::Network(net);
                let spec = ObjectiveSpec::point_mass(param_count(&model), self.max_steps);
                (spec, model, 0.5)
            }
        };
        let config = AgentConfig {
            objective,
            algorithm: self.algo,
            optimizer: AdamEsConfig {
                es: EsConfig {
                    learning_rate: self.lr,
                    noise_std: self.sigma,
                    population_size: self.pop_size,
                    shaping: if self.raw_fitness {
                        FitnessShaping::Raw
                    } else {
                        FitnessShaping::ZScore
                    },
                },
                beta1: self.beta1,
                beta2: self.beta2,
                ..AdamEsConfig::default()
            },
            model,
            iterations: self.iterations,
            seed: self.seed,
            init_range: self.init_range.unwrap_or(default_range),
            log_dir: None,
            actor_epochs: self.actor_epochs,
        };
        config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if self.checkpoint_every == Some(0) {
            return Err(CliError::Usage("--checkpoint-every must be at least 1".into()));
        }
        Ok(config)
    }

    pub fn default_run_name(&self) -> String {
        format!("{}-{}-seed{}", self.algo.as_str(), self.objective, self.seed)
    }
}

/// `parent/name`, or `parent/name-2`, `-3`, ... if taken.
pub fn unique_dir(parent: &Path, name: &str) -> PathBuf {
    let first = parent.join(name);
    if !first.exists() {
        return first;
    }
    (2..)
        .map(|i| parent.join(format!("{name}-{i}")))
        .find(|p| !p.exists())
        .expect("unbounded search")
}

/// Train `config` into `run_dir`, returning the final fitness of the
/// global parameters.
pub fn run_into(config: &AgentConfig, run_dir: &Path, checkpoint_every: Option<usize>) -> Result<f64, CliError> {
    let mut config = config.clone();
    config.log_dir = Some(run_dir.to_path_buf());
    let mut checkpoints = checkpoint_every
        .map(|k| CheckpointCallback::new(k, run_dir.join("checkpoints")))
        .transpose()?;
    let mut callbacks: Vec<&mut dyn Callback> = Vec::new();
    if let Some(cb) = checkpoints.as_mut() {
        callbacks.push(cb);
    }
    let run = train(&config, &mut callbacks)?;
    Ok(run.history.last().map_or(f64::NAN, |h| h.global_fitness))
}

pub fn cmd_train(args: &TrainArgs, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let config = args.resolve()?;
    let run_dir = unique_dir(&args.log_dir, &args.default_run_name());
    let final_fitness = run_into(&config, &run_dir, args.checkpoint_every)?;
    writeln!(out, "final fitness: {final_fitness}")?;
    writeln!(out, "{}", run_dir.display())?;
    Ok(())
}
