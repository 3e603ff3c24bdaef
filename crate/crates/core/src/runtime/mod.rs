//! The training loop.
//!
//! Each iteration samples population noise, evaluates every member (directly
//! for static objectives, through a lockstep rollout into the buffer for
//! episodic ones), estimates the ES gradient, moves the search center with
//! ES or AdamES, logs the reward and metrics sections and runs callbacks.

mod callbacks;
mod config;
mod logger;

use std::fs;
use std::path::PathBuf;

use ndarray::Array2;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use callbacks::{
    load_checkpoint, Callback, CallbackDecision, Checkpoint, CheckpointCallback, EarlyStopCallback, StepContext,
    CHECKPOINT_VERSION,
};
pub use config::{AgentConfig, Algorithm};
pub use logger::{read_metrics, MetricLogger, MetricRecord, Section};

use crate::buffer::RolloutBuffer;
use crate::error::{Error, Result};
use crate::network::{Model, Network};
use crate::objectives::{evaluate_benchmark, fitness, Mode, VecPointMass, ACT_DIM, OBS_DIM};
use crate::optimizer::{adam_direction, apply_direction, estimate_gradient_with, AdamState};
use crate::population::{
    expand_population, global_parameters, sample_noise, NoiseMatrix, ParameterVector, PopulationDistribution,
    PopulationMatrix,
};
use crate::signal::filter_rewards;

pub const METRICS_FILE: &str = "metrics.jsonl";
pub const CONFIG_FILE: &str = "config.json";

/// Record names written every iteration.
pub mod names {
    pub const MEAN_FITNESS: &str = "mean_fitness";
    pub const MAX_FITNESS: &str = "max_fitness";
    /// Fitness of the global parameters after the update.
    pub const GLOBAL_FITNESS: &str = "global_fitness";
    pub const DIVERGENCE: &str = "divergence";
    pub const ENTROPY: &str = "entropy";
    pub const ACTOR_LOSS: &str = "actor_loss";
    pub const CRITIC_LOSS: &str = "critic_loss";
}

const INIT_STREAM: u64 = 0;
const ENV_STREAM_BASE: u64 = 1 << 62;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Population noise for `iteration`. Runs sharing a seed share this stream
/// regardless of algorithm or hyperparameters.
pub fn iteration_noise(seed: u64, iteration: usize, n: usize, d: usize) -> Result<NoiseMatrix> {
    sample_noise(&mut stream_rng(seed, iteration as u64 + 1), n, d)
}

/// Starting-state seed for episodic rollouts at `iteration`.
pub fn iteration_env_seed(seed: u64, iteration: usize) -> u64 {
    stream_rng(seed, ENV_STREAM_BASE + iteration as u64).next_u64()
}

pub fn initial_mean(seed: u64, dim: usize, range: f64) -> ParameterVector {
    let mut rng = stream_rng(seed, INIT_STREAM);
    let values = (0..dim)
        .map(|_| {
            if range > 0.0 {
                rng.random_range(-range..=range)
            } else {
                0.0
            }
        })
        .collect();
    ParameterVector::new(values).expect("uniform draws are finite")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationSummary {
    pub step: usize,
    pub mean_fitness: f64,
    pub max_fitness: f64,
    pub global_fitness: f64,
    /// Benchmark value at the global parameters (static objectives only).
    pub global_value: Option<f64>,
    pub divergence: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub final_params: ParameterVector,
    pub log_path: Option<PathBuf>,
    pub iterations: usize,
    /// Steps at which some callback reported a save.
    pub saved_steps: Vec<usize>,
    pub history: Vec<IterationSummary>,
}

/// A user-supplied static fitness function (to maximize).
pub type FitnessFn<'a> = &'a dyn Fn(&[f64]) -> f64;

pub fn train(config: &AgentConfig, callbacks: &mut [&mut dyn Callback]) -> Result<RunArtifacts> {
    run(config, None, callbacks)
}

/// Train against `fitness_fn` instead of the configured objective. The
/// objective still fixes the dimension and must be static.
pub fn train_custom(
    config: &AgentConfig,
    fitness_fn: FitnessFn<'_>,
    callbacks: &mut [&mut dyn Callback],
) -> Result<RunArtifacts> {
    if config.objective.mode() != Mode::Static {
        return Err(Error::invalid(
            "custom fitness functions replace static objectives only",
        ));
    }
    run(config, Some(fitness_fn), callbacks)
}

fn run(
    config: &AgentConfig,
    custom: Option<FitnessFn<'_>>,
    callbacks: &mut [&mut dyn Callback],
) -> Result<RunArtifacts> {
    config.validate()?;
    let spec = &config.objective;
    let opt = &config.optimizer;
    let n = opt.es.population_size;
    let d = spec.dimension;

    let mut logger = match &config.log_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let cfg_path = dir.join(CONFIG_FILE);
            fs::write(&cfg_path, serde_json::to_vec_pretty(config)?).map_err(|e| Error::io(&cfg_path, e))?;
            MetricLogger::create(dir.join(METRICS_FILE))?
        }
        None => MetricLogger::in_memory(),
    };

    let mut dist =
        PopulationDistribution::isotropic(initial_mean(config.seed, d, config.init_range), opt.es.noise_std, n)?;
    let mut adam = AdamState::new(d);
    let mut buffer = match spec.mode() {
        Mode::Episodic => Some(RolloutBuffer::new(
            spec.max_steps.expect("validated"),
            n,
            OBS_DIM,
            ACT_DIM,
        )?),
        Mode::Static => None,
    };

    let mut history = Vec::with_capacity(config.iterations);
    let mut saved_steps = Vec::new();
    let mut completed = 0;
    for it in 0..config.iterations {
        let eps = iteration_noise(config.seed, it, n, d)?;
        let population = expand_population(&dist, &eps)?;
        let env_seed = iteration_env_seed(config.seed, it);
        let member_fitness = match (custom, buffer.as_mut()) {
            (Some(f), _) => population.members().map(|p| f(p.as_slice())).collect(),
            (None, None) => population
                .members()
                .map(|p| fitness(spec, &config.model, &p, env_seed))
                .collect::<Result<Vec<_>>>()?,
            (None, Some(buf)) => {
                debug_assert!(buf.is_empty(), "buffer must be empty at the top of an iteration");
                rollout_population(buf, &config.model, &population, env_seed)?
            }
        };

        let grad = estimate_gradient_with(&eps, &member_fitness, dist.mean_std(), opt.es.shaping)?;
        let direction = match config.algorithm {
            Algorithm::Es => grad,
            Algorithm::Adames => {
                let (dir, next) = adam_direction(&adam, &grad, opt)?;
                adam = next;
                dir
            }
        };
        let (next, update) = apply_direction(&dist, &direction, opt.es.learning_rate, config.actor_epochs)?;
        dist = next;
        if let Some(buf) = buffer.as_mut() {
            buf.reset();
        }

        let params = global_parameters(&dist);
        let (global_fitness, global_value) = match custom {
            Some(f) => (f(params.as_slice()), None),
            None => (
                fitness(spec, &config.model, &params, env_seed)?,
                spec.name
                    .benchmark()
                    .map(|b| evaluate_benchmark(b, params.as_slice()))
                    .transpose()?,
            ),
        };
        let mean_fitness = member_fitness.iter().sum::<f64>() / n as f64;
        let max_fitness = member_fitness.iter().copied().fold(f64::NEG_INFINITY, f64::max);

        let step = it as u64;
        let records = [
            MetricRecord::new(step, Section::Reward, names::MEAN_FITNESS, mean_fitness),
            MetricRecord::new(step, Section::Reward, names::MAX_FITNESS, max_fitness),
            MetricRecord::new(step, Section::Reward, names::GLOBAL_FITNESS, global_fitness),
            MetricRecord::new(step, Section::Metrics, names::DIVERGENCE, update.divergence),
            MetricRecord::new(step, Section::Metrics, names::ENTROPY, update.entropy),
        ];
        for r in &records {
            logger.log(r.clone())?;
        }
        history.push(IterationSummary {
            step: it,
            mean_fitness,
            max_fitness,
            global_fitness,
            global_value,
            divergence: update.divergence,
            entropy: update.entropy,
        });
        completed = it + 1;

        let ctx = StepContext {
            step: it,
            records: &records,
            params: &params,
        };
        let mut stop = false;
        for cb in callbacks.iter_mut() {
            let decision = cb.on_step(&ctx)?;
            stop |= decision.stop;
            if decision.save && saved_steps.last() != Some(&it) {
                saved_steps.push(it);
            }
        }
        if stop {
            break;
        }
    }
    logger.flush()?;

    Ok(RunArtifacts {
        final_params: global_parameters(&dist),
        log_path: logger.path().map(Into::into),
        iterations: completed,
        saved_steps,
        history,
    })
}

/// Roll every member out for `max_steps` lockstep steps, one environment
/// each, and return per-member returns truncated at the first episode end.
fn rollout_population(
    buffer: &mut RolloutBuffer,
    model: &Model,
    population: &PopulationMatrix,
    env_seed: u64,
) -> Result<Vec<f64>> {
    let Model::Network(spec) = model else {
        return Err(Error::invalid("episodic rollouts need a network policy"));
    };
    let policies = population
        .members()
        .map(|p| Network::from_params(spec, &p))
        .collect::<Result<Vec<_>>>()?;
    let n = policies.len();
    let mut envs = VecPointMass::from_seeds(&vec![env_seed; n], buffer.capacity())?;
    let mut obs = obs_matrix(&envs.reset());
    for _ in 0..buffer.capacity() {
        let actions = policies
            .iter()
            .zip(obs.rows())
            .map(|(net, o)| Ok(net.forward(o.as_slice().expect("row-major"))?[0]))
            .collect::<Result<Vec<f64>>>()?;
        let steps = envs.step(&actions)?;
        let next = obs_matrix(&steps.iter().map(|s| s.observation).collect::<Vec<_>>());
        let rewards: Vec<f64> = steps.iter().map(|s| s.reward).collect();
        let dones: Vec<bool> = steps.iter().map(|s| s.done).collect();
        let act = Array2::from_shape_vec((n, ACT_DIM), actions).expect("one action per env");
        buffer.add(obs.view(), act.view(), &rewards, next.view(), &dones)?;
        obs = next;
    }
    let filtered = filter_rewards(&buffer.rewards_by_env(), &buffer.dones_by_env())?;
    Ok(filtered.rows().into_iter().map(|r| r.sum()).collect())
}

fn obs_matrix(obs: &[[f64; OBS_DIM]]) -> Array2<f64> {
    Array2::from_shape_fn((obs.len(), OBS_DIM), |(i, j)| obs[i][j])
}
