//! Rollout storage for a lockstep vector of environments.
//!
//! Observations live in a single `(capacity + 1) x num_envs x obs_dim`
//! array: the next observation of step `t` is the observation of step
//! `t + 1`. After a terminal step that slot holds the reset observation of
//! the following episode, so consumers must mask bootstraps with `dones`.

use ndarray::{s, Array2, Array3, ArrayD, ArrayView2, Axis, IxDyn};
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBuffer {
    capacity: usize,
    num_envs: usize,
    observations: Array3<f64>,
    actions: Array3<f64>,
    rewards: Array2<f64>,
    dones: Array2<bool>,
    position: usize,
    full: bool,
}

/// Aligned slices of stored steps. The leading axis is time, or time and
/// environment merged when flattened.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub observations: ArrayD<f64>,
    pub actions: ArrayD<f64>,
    pub rewards: ArrayD<f64>,
    pub dones: ArrayD<bool>,
    pub next_observations: ArrayD<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rewards.shape()[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Merge the time and environment axes, step-major: every environment
    /// of step 0, then every environment of step 1, and so on.
    pub fn flatten_env(self) -> Batch {
        fn merge<T: Clone>(a: ArrayD<T>) -> ArrayD<T> {
            let shape = a.shape();
            let mut merged = vec![shape[0] * shape[1]];
            merged.extend_from_slice(&shape[2..]);
            let a = a.as_standard_layout().into_owned();
            a.into_shape_with_order(IxDyn(&merged))
                .expect("standard layout reshape")
        }
        Batch {
            observations: merge(self.observations),
            actions: merge(self.actions),
            rewards: merge(self.rewards),
            dones: merge(self.dones),
            next_observations: merge(self.next_observations),
        }
    }
}

impl RolloutBuffer {
    pub fn new(capacity: usize, num_envs: usize, obs_dim: usize, act_dim: usize) -> Result<Self> {
        if capacity == 0 || num_envs == 0 || obs_dim == 0 || act_dim == 0 {
            return Err(Error::invalid("buffer dimensions must all be positive"));
        }
        Ok(Self {
            capacity,
            num_envs,
            observations: Array3::zeros((capacity + 1, num_envs, obs_dim)),
            actions: Array3::zeros((capacity, num_envs, act_dim)),
            rewards: Array2::zeros((capacity, num_envs)),
            dones: Array2::from_elem((capacity, num_envs), false),
            position: 0,
            full: false,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn num_envs(&self) -> usize {
        self.num_envs
    }

    pub fn position(&self) -> usize {
        self.position
    }

    pub fn is_full(&self) -> bool {
        self.full
    }

    pub fn is_empty(&self) -> bool {
        self.position == 0
    }

    /// Number of scalars held for observations (current and next together).
    pub fn observation_storage_len(&self) -> usize {
        self.observations.len()
    }

    /// Record one lockstep transition for every environment.
    pub fn add(
        &mut self,
        observations: ArrayView2<'_, f64>,
        actions: ArrayView2<'_, f64>,
        rewards: &[f64],
        next_observations: ArrayView2<'_, f64>,
        dones: &[bool],
    ) -> Result<()> {
        if self.position >= self.capacity {
            return Err(Error::CapacityExceeded {
                capacity: self.capacity,
            });
        }
        let obs_shape = (self.num_envs, self.observations.shape()[2]);
        let act_shape = (self.num_envs, self.actions.shape()[2]);
        if observations.dim() != obs_shape || next_observations.dim() != obs_shape {
            return Err(Error::invalid(format!("observations must have shape {obs_shape:?}")));
        }
        if actions.dim() != act_shape {
            return Err(Error::invalid(format!("actions must have shape {act_shape:?}")));
        }
        if rewards.len() != self.num_envs || dones.len() != self.num_envs {
            return Err(Error::invalid(format!(
                "rewards and dones need one entry per environment ({})",
                self.num_envs
            )));
        }
        let t = self.position;
        self.observations.slice_mut(s![t, .., ..]).assign(&observations);
        self.observations
            .slice_mut(s![t + 1, .., ..])
            .assign(&next_observations);
        self.actions.slice_mut(s![t, .., ..]).assign(&actions);
        self.rewards.row_mut(t).assign(&ndarray::ArrayView1::from(rewards));
        self.dones.row_mut(t).assign(&ndarray::ArrayView1::from(dones));
        self.position += 1;
        self.full = self.position == self.capacity;
        Ok(())
    }

    fn gather(&self, steps: &[usize]) -> Batch {
        let next: Vec<usize> = steps.iter().map(|t| t + 1).collect();
        Batch {
            observations: self.observations.select(Axis(0), steps).into_dyn(),
            actions: self.actions.select(Axis(0), steps).into_dyn(),
            rewards: self.rewards.select(Axis(0), steps).into_dyn(),
            dones: self.dones.select(Axis(0), steps).into_dyn(),
            next_observations: self.observations.select(Axis(0), &next).into_dyn(),
        }
    }

    fn range(&self, start: usize, end: usize) -> Batch {
        Batch {
            observations: self.observations.slice(s![start..end, .., ..]).to_owned().into_dyn(),
            actions: self.actions.slice(s![start..end, .., ..]).to_owned().into_dyn(),
            rewards: self.rewards.slice(s![start..end, ..]).to_owned().into_dyn(),
            dones: self.dones.slice(s![start..end, ..]).to_owned().into_dyn(),
            next_observations: self
                .observations
                .slice(s![start + 1..end + 1, .., ..])
                .to_owned()
                .into_dyn(),
        }
    }

    pub fn all(&self, flatten_env: bool) -> Result<Batch> {
        if self.position == 0 {
            return Err(Error::EmptyBuffer);
        }
        let batch = self.range(0, self.position);
        Ok(if flatten_env { batch.flatten_env() } else { batch })
    }

    /// The most recent `k` steps, oldest first.
    pub fn last(&self, k: usize) -> Result<Batch> {
        if self.position == 0 {
            return Err(Error::EmptyBuffer);
        }
        if k == 0 || k > self.position {
            return Err(Error::OutOfRange {
                requested: k,
                available: self.position,
            });
        }
        Ok(self.range(self.position - k, self.position))
    }

    /// `batch_size` steps drawn uniformly with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Result<Batch> {
        if self.position == 0 {
            return Err(Error::EmptyBuffer);
        }
        let steps: Vec<usize> = (0..batch_size).map(|_| rng.random_range(0..self.position)).collect();
        Ok(self.gather(&steps))
    }

    /// Stored rewards as `num_envs x steps`, one row per environment.
    pub fn rewards_by_env(&self) -> Array2<f64> {
        self.rewards.slice(s![..self.position, ..]).t().to_owned()
    }

    /// Stored dones as `num_envs x steps`.
    pub fn dones_by_env(&self) -> Array2<bool> {
        self.dones.slice(s![..self.position, ..]).t().to_owned()
    }

    pub fn reset(&mut self) {
        self.position = 0;
        self.full = false;
    }
}
