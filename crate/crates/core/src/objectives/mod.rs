//! Fitness tasks. Every objective is maximized: static benchmarks are
//! negated here, episodic tasks report the (nonpositive) episode return.

mod benchmarks;
mod point_mass;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use benchmarks::{ackley, evaluate_benchmark, rastrigin, rosenbrock, sphere, Benchmark};
pub use point_mass::{PointMass, Step, VecPointMass, ACT_DIM, OBS_DIM};

use crate::error::{Error, Result};
use crate::network::{forward, Model};
use crate::population::ParameterVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveName {
    Sphere,
    Rastrigin,
    Ackley,
    Rosenbrock,
    PointMass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Static,
    Episodic,
}

impl ObjectiveName {
    pub fn as_str(self) -> &'static str {
        match self {
            ObjectiveName::Sphere => "sphere",
            ObjectiveName::Rastrigin => "rastrigin",
            ObjectiveName::Ackley => "ackley",
            ObjectiveName::Rosenbrock => "rosenbrock",
            ObjectiveName::PointMass => "point_mass",
        }
    }

    pub fn benchmark(self) -> Option<Benchmark> {
        match self {
            ObjectiveName::Sphere => Some(Benchmark::Sphere),
            ObjectiveName::Rastrigin => Some(Benchmark::Rastrigin),
            ObjectiveName::Ackley => Some(Benchmark::Ackley),
            ObjectiveName::Rosenbrock => Some(Benchmark::Rosenbrock),
            ObjectiveName::PointMass => None,
        }
    }

    pub fn mode(self) -> Mode {
        match self.benchmark() {
            Some(_) => Mode::Static,
            None => Mode::Episodic,
        }
    }
}

impl fmt::Display for ObjectiveName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObjectiveName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            ObjectiveName::Sphere,
            ObjectiveName::Rastrigin,
            ObjectiveName::Ackley,
            ObjectiveName::Rosenbrock,
            ObjectiveName::PointMass,
        ]
        .into_iter()
        .find(|o| o.as_str() == s)
        .ok_or_else(|| Error::invalid(format!("unknown objective '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub name: ObjectiveName,
    /// Length of the parameter vectors the objective accepts.
    pub dimension: usize,
    /// Episode length cap; only meaningful for episodic objectives.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
}

impl ObjectiveSpec {
    pub fn benchmark(benchmark: Benchmark, dimension: usize) -> Self {
        let name = match benchmark {
            Benchmark::Sphere => ObjectiveName::Sphere,
            Benchmark::Rastrigin => ObjectiveName::Rastrigin,
            Benchmark::Ackley => ObjectiveName::Ackley,
            Benchmark::Rosenbrock => ObjectiveName::Rosenbrock,
        };
        Self {
            name,
            dimension,
            max_steps: None,
        }
    }

    pub fn point_mass(dimension: usize, max_steps: usize) -> Self {
        Self {
            name: ObjectiveName::PointMass,
            dimension,
            max_steps: Some(max_steps),
        }
    }

    pub fn mode(&self) -> Mode {
        self.name.mode()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::invalid("objective dimension must be at least 1"));
        }
        match self.name.benchmark() {
            Some(b) if self.dimension < b.min_dimension() => Err(Error::invalid(format!(
                "{b} needs at least {} dimensions",
                b.min_dimension()
            ))),
            Some(_) => Ok(()),
            None => match self.max_steps {
                Some(s) if s >= 1 => Ok(()),
                _ => Err(Error::invalid("episodic objectives need max_steps >= 1")),
            },
        }
    }

    /// Check that `model` produces parameter vectors this objective accepts.
    pub fn check_model(&self, model: &Model) -> Result<()> {
        self.validate()?;
        model.validate()?;
        let count = crate::network::param_count(model);
        if count != self.dimension {
            return Err(Error::invalid(format!(
                "objective {} has dimension {} but the model has {count} parameters",
                self.name, self.dimension
            )));
        }
        match (self.mode(), model) {
            (Mode::Static, Model::Dummy { .. }) => Ok(()),
            (Mode::Static, Model::Network(_)) => Err(Error::invalid("static objectives take a dummy model")),
            (Mode::Episodic, Model::Network(spec)) if spec.input_dim == OBS_DIM && spec.output_dim == ACT_DIM => Ok(()),
            (Mode::Episodic, _) => Err(Error::invalid(format!(
                "{} needs a network with {OBS_DIM} inputs and {ACT_DIM} output",
                self.name
            ))),
        }
    }
}

/// One episode of an episodic objective.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub observations: Vec<[f64; OBS_DIM]>,
    pub actions: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    pub episode_return: f64,
}

/// Roll out one episode of `env` under the policy `model` at `params`.
pub fn rollout_episode(env: &mut PointMass, model: &Model, params: &ParameterVector) -> Result<EpisodeResult> {
    let mut obs = env.reset();
    let mut result = EpisodeResult {
        observations: vec![obs],
        actions: Vec::new(),
        rewards: Vec::new(),
        dones: Vec::new(),
        episode_return: 0.0,
    };
    loop {
        let action = forward(model, params, &obs)?[0];
        let step = env.step(action);
        obs = step.observation;
        result.observations.push(obs);
        result.actions.push(action);
        result.rewards.push(step.reward);
        result.dones.push(step.done);
        result.episode_return += step.reward;
        if step.done {
            return Ok(result);
        }
    }
}

/// Fitness to maximize.
///
/// `env_seed` seeds the starting state of episodic objectives and is
/// ignored by static ones.
pub fn fitness(spec: &ObjectiveSpec, model: &Model, params: &ParameterVector, env_seed: u64) -> Result<f64> {
    if params.len() != spec.dimension {
        return Err(Error::invalid(format!(
            "objective {} expects {} parameters, got {}",
            spec.name,
            spec.dimension,
            params.len()
        )));
    }
    match spec.name.benchmark() {
        Some(b) => Ok(-evaluate_benchmark(b, params.as_slice())?),
        None => {
            spec.check_model(model)?;
            let max_steps = spec.max_steps.expect("validated episodic spec");
            let mut env = PointMass::new(env_seed, max_steps)?;
            Ok(rollout_episode(&mut env, model, params)?.episode_return)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Head, NetworkSpec};

    fn pv(v: Vec<f64>) -> ParameterVector {
        ParameterVector::new(v).unwrap()
    }

    #[test]
    fn static_fitness_is_negated() {
        let spec = ObjectiveSpec::benchmark(Benchmark::Sphere, 2);
        let m = Model::Dummy { dim: 2 };
        assert_eq!(fitness(&spec, &m, &pv(vec![0.0, 0.0]), 0).unwrap(), 0.0);
        assert_eq!(fitness(&spec, &m, &pv(vec![1.0, 2.0]), 0).unwrap(), -5.0);
        assert!(fitness(&spec, &m, &pv(vec![1.0]), 0).is_err());
    }

    #[test]
    fn episodic_rollout_invariants() {
        let spec_net = NetworkSpec::new(OBS_DIM, vec![], ACT_DIM).with_head(Head::TanhBounded);
        let model = Model::Network(spec_net);
        let params = pv(vec![-1.0, -1.5, 0.0]);
        let mut env = PointMass::new(4, 100).unwrap();
        let ep = rollout_episode(&mut env, &model, &params).unwrap();
        assert_eq!(ep.observations.len(), ep.rewards.len() + 1);
        assert_eq!(ep.dones.iter().filter(|d| **d).count(), 1);
        assert!(*ep.dones.last().unwrap());
        assert!((ep.episode_return - ep.rewards.iter().sum::<f64>()).abs() < 1e-12);
        assert!(ep.episode_return <= 0.0);
        let spec = ObjectiveSpec::point_mass(3, 100);
        assert_eq!(fitness(&spec, &model, &params, 4).unwrap(), ep.episode_return);
    }

    #[test]
    fn model_checks() {
        let spec = ObjectiveSpec::point_mass(3, 10);
        assert!(spec.check_model(&Model::Dummy { dim: 3 }).is_err());
        assert!(spec
            .check_model(&Model::Network(NetworkSpec::new(OBS_DIM, vec![], ACT_DIM)))
            .is_ok());
        assert!(ObjectiveSpec::point_mass(3, 0).validate().is_err());
        assert!(ObjectiveSpec::benchmark(Benchmark::Rosenbrock, 1).validate().is_err());
        let s = ObjectiveSpec::benchmark(Benchmark::Sphere, 4);
        assert!(s.check_model(&Model::Dummy { dim: 3 }).is_err());
    }

    #[test]
    fn objective_names_parse() {
        assert_eq!("point_mass".parse::<ObjectiveName>().unwrap(), ObjectiveName::PointMass);
        assert_eq!("ackley".parse::<ObjectiveName>().unwrap().mode(), Mode::Static);
        assert!("cartpole".parse::<ObjectiveName>().is_err());
    }
}
