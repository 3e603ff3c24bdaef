//! A one-dimensional point mass to be driven to the origin.
//!
//! Observation is `[position, velocity]`, the action is an acceleration
//! clipped to `[-1, 1]`, and each step costs `position^2 + 0.1 * action^2`
//! measured after the move. The episode ends once the mass is within
//! `0.01` of the origin or after `max_steps` steps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const DT: f64 = 0.1;
pub const ACTION_BOUND: f64 = 1.0;
pub const GOAL_RADIUS: f64 = 0.01;
pub const ACTION_COST: f64 = 0.1;
/// Starting positions are drawn from `[-START_RANGE, START_RANGE]`.
pub const START_RANGE: f64 = 1.0;
pub const OBS_DIM: usize = 2;
pub const ACT_DIM: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub observation: [f64; OBS_DIM],
    pub reward: f64,
    pub done: bool,
}

#[derive(Debug, Clone)]
pub struct PointMass {
    position: f64,
    velocity: f64,
    steps: usize,
    max_steps: usize,
    start: Option<(f64, f64)>,
    rng: ChaCha8Rng,
}

impl PointMass {
    /// Randomized starts drawn from a generator seeded with `seed`.
    pub fn new(seed: u64, max_steps: usize) -> Result<Self> {
        Self::build(seed, max_steps, None)
    }

    /// Every episode starts from the given state.
    pub fn with_start(position: f64, velocity: f64, max_steps: usize) -> Result<Self> {
        Self::build(0, max_steps, Some((position, velocity)))
    }

    fn build(seed: u64, max_steps: usize, start: Option<(f64, f64)>) -> Result<Self> {
        if max_steps == 0 {
            return Err(Error::invalid("max_steps must be at least 1"));
        }
        Ok(Self {
            position: 0.0,
            velocity: 0.0,
            steps: 0,
            max_steps,
            start,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    pub fn observation(&self) -> [f64; OBS_DIM] {
        [self.position, self.velocity]
    }

    pub fn reset(&mut self) -> [f64; OBS_DIM] {
        let (p, v) = match self.start {
            Some(s) => s,
            None => (self.rng.random_range(-START_RANGE..=START_RANGE), 0.0),
        };
        self.position = p;
        self.velocity = v;
        self.steps = 0;
        self.observation()
    }

    pub fn step(&mut self, action: f64) -> Step {
        let a = if action.is_nan() {
            0.0
        } else {
            action.clamp(-ACTION_BOUND, ACTION_BOUND)
        };
        self.velocity += a * DT;
        self.position += self.velocity * DT;
        self.steps += 1;
        let reward = -(self.position * self.position + ACTION_COST * a * a);
        let done = self.position.abs() < GOAL_RADIUS || self.steps >= self.max_steps;
        Step {
            observation: self.observation(),
            reward,
            done,
        }
    }
}

/// `n` point masses stepped in lockstep. A finished instance is reset
/// immediately and the reset observation is returned in its slot.
#[derive(Debug, Clone)]
pub struct VecPointMass {
    envs: Vec<PointMass>,
}

impl VecPointMass {
    /// Instance `i` is seeded with `seeds[i]`.
    pub fn from_seeds(seeds: &[u64], max_steps: usize) -> Result<Self> {
        if seeds.is_empty() {
            return Err(Error::invalid("need at least one environment"));
        }
        let envs = seeds
            .iter()
            .map(|&s| PointMass::new(s, max_steps))
            .collect::<Result<_>>()?;
        Ok(Self { envs })
    }

    pub fn from_envs(envs: Vec<PointMass>) -> Result<Self> {
        if envs.is_empty() {
            return Err(Error::invalid("need at least one environment"));
        }
        Ok(Self { envs })
    }

    pub fn num_envs(&self) -> usize {
        self.envs.len()
    }

    pub fn reset(&mut self) -> Vec<[f64; OBS_DIM]> {
        self.envs.iter_mut().map(PointMass::reset).collect()
    }

    pub fn step(&mut self, actions: &[f64]) -> Result<Vec<Step>> {
        if actions.len() != self.envs.len() {
            return Err(Error::invalid(format!(
                "got {} actions for {} environments",
                actions.len(),
                self.envs.len()
            )));
        }
        Ok(self
            .envs
            .iter_mut()
            .zip(actions)
            .map(|(env, &a)| {
                let mut s = env.step(a);
                if s.done {
                    s.observation = env.reset();
                }
                s
            })
            .collect())
    }
}
