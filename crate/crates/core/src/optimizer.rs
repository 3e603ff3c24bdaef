//! ES gradient estimation and the ES / AdamES mean updates.
//!
//! Both optimizers estimate an ascent direction from fitness-weighted
//! population noise. Plain ES moves the search center along that estimate.
//! AdamES feeds it through Adam's momentum and dampening averages and moves
//! along the bias-corrected ratio instead.

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::{population_entropy, population_kl, NoiseMatrix, ParameterVector, PopulationDistribution};
use crate::signal::scale;

/// Default fuzz term added to the dampening root.
pub const DEFAULT_FUZZ: f64 = 1e-8;

/// How raw fitness values are turned into gradient weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitnessShaping {
    /// Z-score the population fitness first.
    #[default]
    ZScore,
    /// Weight noise by the raw returns.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EsConfig {
    pub learning_rate: f64,
    pub noise_std: f64,
    pub population_size: usize,
    #[serde(default)]
    pub shaping: FitnessShaping,
}

impl Default for EsConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            noise_std: 1.0,
            population_size: 10,
            shaping: FitnessShaping::ZScore,
        }
    }
}

impl EsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.noise_std.is_finite() && self.noise_std > 0.0) {
            return Err(Error::invalid(format!(
                "noise std must be positive, got {}",
                self.noise_std
            )));
        }
        if self.population_size < 2 {
            return Err(Error::invalid(format!(
                "population size must be at least 2, got {}",
                self.population_size
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamEsConfig {
    #[serde(flatten)]
    pub es: EsConfig,
    pub beta1: f64,
    pub beta2: f64,
    pub fuzz: f64,
}

impl Default for AdamEsConfig {
    fn default() -> Self {
        Self {
            es: EsConfig::default(),
            beta1: 0.9,
            beta2: 0.999,
            fuzz: DEFAULT_FUZZ,
        }
    }
}

impl AdamEsConfig {
    pub fn validate(&self) -> Result<()> {
        self.es.validate()?;
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1), got {b}")));
            }
        }
        if !(self.fuzz.is_finite() && self.fuzz > 0.0) {
            return Err(Error::invalid(format!("fuzz must be positive, got {}", self.fuzz)));
        }
        Ok(())
    }
}

/// Adam moment estimates. `step` is the 1-based index of the next update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(dim: usize) -> Self {
        Self {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            step: 1,
        }
    }
}

/// Per-update telemetry, in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateLog {
    pub divergence: f64,
    pub entropy: f64,
}

/// `eps^T * scale(fitness) / (mean_std * n)`.
pub fn estimate_gradient(eps: &NoiseMatrix, fitness: &[f64], mean_std: f64) -> Result<Vec<f64>> {
    estimate_gradient_with(eps, fitness, mean_std, FitnessShaping::ZScore)
}

pub fn estimate_gradient_with(
    eps: &NoiseMatrix,
    fitness: &[f64],
    mean_std: f64,
    shaping: FitnessShaping,
) -> Result<Vec<f64>> {
    let n = eps.rows();
    if fitness.len() != n {
        return Err(Error::invalid(format!(
            "got {} fitness values for {n} population members",
            fitness.len()
        )));
    }
    if n < 2 {
        return Err(Error::invalid("gradient estimate needs at least 2 population members"));
    }
    if fitness.iter().any(|f| !f.is_finite()) {
        return Err(Error::invalid("fitness values must be finite"));
    }
    if !(mean_std.is_finite() && mean_std > 0.0) {
        return Err(Error::invalid(format!("mean std must be positive, got {mean_std}")));
    }
    let weights = match shaping {
        FitnessShaping::ZScore => scale(fitness),
        FitnessShaping::Raw => fitness.to_vec(),
    };
    let grad = eps.view().t().dot(&ArrayView1::from(&weights)) / (mean_std * n as f64);
    Ok(grad.to_vec())
}

/// One Adam update on `grad`, returning the step direction and next state.
pub fn adam_direction(state: &AdamState, grad: &[f64], cfg: &AdamEsConfig) -> Result<(Vec<f64>, AdamState)> {
    if grad.len() != state.m.len() || grad.len() != state.v.len() {
        return Err(Error::invalid(format!(
            "gradient length {} does not match optimizer state length {}",
            grad.len(),
            state.m.len()
        )));
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::invalid("gradient must be finite"));
    }
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    let t = i32::try_from(state.step).unwrap_or(i32::MAX);
    let m_corr = 1.0 - b1.powi(t);
    let v_corr = 1.0 - b2.powi(t);

    let mut next = AdamState {
        m: Vec::with_capacity(grad.len()),
        v: Vec::with_capacity(grad.len()),
        step: state.step + 1,
    };
    let mut direction = Vec::with_capacity(grad.len());
    for ((g, m), v) in grad.iter().zip(&state.m).zip(&state.v) {
        let m = (1.0 - b1) * g + b1 * m;
        let v = (1.0 - b2) * (g * g) + b2 * v;
        let m_hat = m / m_corr;
        let v_hat = v / v_corr;
        direction.push(m_hat / (v_hat.sqrt() + cfg.fuzz));
        next.m.push(m);
        next.v.push(v);
    }
    Ok((direction, next))
}

/// Move the mean by `learning_rate * direction`, `epochs` times.
///
/// Divergences are summed over epochs and entropies averaged.
pub fn apply_direction(
    dist: &PopulationDistribution,
    direction: &[f64],
    learning_rate: f64,
    epochs: usize,
) -> Result<(PopulationDistribution, UpdateLog)> {
    if direction.len() != dist.dim() {
        return Err(Error::invalid(format!(
            "direction length {} does not match distribution dimension {}",
            direction.len(),
            dist.dim()
        )));
    }
    if epochs == 0 {
        return Err(Error::invalid("at least one epoch is required"));
    }
    let mut current = dist.clone();
    let mut divergence = 0.0;
    let mut entropy = 0.0;
    for _ in 0..epochs {
        let mean: Vec<f64> = current
            .mean()
            .as_slice()
            .iter()
            .zip(direction)
            .map(|(m, d)| m + learning_rate * d)
            .collect();
        let next = current.with_mean(ParameterVector::new(mean)?)?;
        divergence += population_kl(&current, &next)?;
        entropy += population_entropy(&next);
        current = next;
    }
    Ok((
        current,
        UpdateLog {
            divergence,
            entropy: entropy / epochs as f64,
        },
    ))
}

/// Plain ES: `mean' = mean + learning_rate * grad`.
pub fn es_step(
    dist: &PopulationDistribution,
    grad: &[f64],
    learning_rate: f64,
) -> Result<(PopulationDistribution, UpdateLog)> {
    apply_direction(dist, grad, learning_rate, 1)
}

/// One full AdamES iteration from evaluated population noise.
pub fn adames_step(
    dist: &PopulationDistribution,
    eps: &NoiseMatrix,
    fitness: &[f64],
    state: &AdamState,
    cfg: &AdamEsConfig,
) -> Result<(PopulationDistribution, AdamState, UpdateLog)> {
    let grad = estimate_gradient_with(eps, fitness, dist.mean_std(), cfg.es.shaping)?;
    let (direction, next_state) = adam_direction(state, &grad, cfg)?;
    let (next, log) = apply_direction(dist, &direction, cfg.es.learning_rate, 1)?;
    Ok((next, next_state, log))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(b1: f64, b2: f64) -> AdamEsConfig {
        AdamEsConfig {
            beta1: b1,
            beta2: b2,
            ..AdamEsConfig::default()
        }
    }

    fn dist(mean: Vec<f64>, std: f64, n: usize) -> PopulationDistribution {
        PopulationDistribution::isotropic(ParameterVector::new(mean).unwrap(), std, n).unwrap()
    }

    #[test]
    fn gradient_two_member_case() {
        let eps = NoiseMatrix::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        let g = estimate_gradient(&eps, &[1.0, -1.0], 1.0).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-7 && g[1] == 0.0);
        let g2 = estimate_gradient(&eps, &[1.0, -1.0], 2.0).unwrap();
        assert!((g2[0] - g[0] / 2.0).abs() < 1e-15);
        let flat = estimate_gradient(&eps, &[3.0, 3.0], 1.0).unwrap();
        assert_eq!(flat, vec![0.0, 0.0]);
    }

    #[test]
    fn gradient_errors() {
        let one = NoiseMatrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(estimate_gradient(&one, &[1.0], 1.0).is_err());
        let two = NoiseMatrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(estimate_gradient(&two, &[1.0], 1.0).is_err());
        assert!(estimate_gradient(&two, &[1.0, f64::NAN], 1.0).is_err());
    }

    #[test]
    fn raw_shaping_uses_returns_directly() {
        let eps = NoiseMatrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let g = estimate_gradient_with(&eps, &[3.0, 5.0], 0.5, FitnessShaping::Raw).unwrap();
        assert!((g[0] - (3.0 + 10.0) / (0.5 * 2.0)).abs() < 1e-12);
    }

    #[test]
    fn adam_first_step_bias_correction() {
        let (dir, next) = adam_direction(&AdamState::new(1), &[3.0], &cfg(0.9, 0.999)).unwrap();
        assert!((dir[0] - 3.0 / (3.0 + 1e-8)).abs() < 1e-12);
        assert_eq!(next.step, 2);
        assert!((next.m[0] - 0.3).abs() < 1e-15);
        assert!((next.v[0] - 0.009).abs() < 1e-15);
        let (zero, _) = adam_direction(&AdamState::new(1), &[0.0], &cfg(0.9, 0.999)).unwrap();
        assert_eq!(zero, vec![0.0]);
    }

    #[test]
    fn adam_without_averaging_is_sign_step() {
        let (dir, _) = adam_direction(&AdamState::new(3), &[2.5, -0.1, 0.0], &cfg(0.0, 0.0)).unwrap();
        assert!((dir[0] - 1.0).abs() < 1e-8 && (dir[1] + 1.0).abs() < 1e-6 && dir[2] == 0.0);
    }

    #[test]
    fn adam_rejects_bad_gradients() {
        let s = AdamState::new(2);
        assert!(adam_direction(&s, &[1.0], &cfg(0.9, 0.999)).is_err());
        assert!(adam_direction(&s, &[1.0, f64::INFINITY], &cfg(0.9, 0.999)).is_err());
    }

    #[test]
    fn es_step_hand_case() {
        let d = dist(vec![0.0], 1.0, 10);
        let (next, log) = es_step(&d, &[2.0], 0.1).unwrap();
        assert!((next.mean().as_slice()[0] - 0.2).abs() < 1e-15);
        assert!((log.divergence - 0.02).abs() < 1e-15);
        assert_eq!(next.std(), d.std());
        let (same, log) = es_step(&d, &[0.0], 0.1).unwrap();
        assert_eq!(same, d);
        assert_eq!(log.divergence, 0.0);
        assert!(es_step(&d, &[1.0, 1.0], 0.1).is_err());
    }

    #[test]
    fn es_steps_commute_on_the_mean() {
        let d = dist(vec![1.0, -1.0], 0.5, 4);
        let (a, _) = es_step(&d, &[0.25, 0.5], 0.1).unwrap();
        let (a, _) = es_step(&a, &[-1.0, 2.0], 0.1).unwrap();
        let (b, _) = es_step(&d, &[-1.0, 2.0], 0.1).unwrap();
        let (b, _) = es_step(&b, &[0.25, 0.5], 0.1).unwrap();
        for (x, y) in a.mean().as_slice().iter().zip(b.mean().as_slice()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn repeated_epochs_sum_divergence() {
        let d = dist(vec![0.0], 1.0, 10);
        let (next, log) = apply_direction(&d, &[1.0], 0.1, 3).unwrap();
        assert!((next.mean().as_slice()[0] - 0.3).abs() < 1e-12);
        assert!((log.divergence - 3.0 * 0.005).abs() < 1e-12);
        assert!(apply_direction(&d, &[1.0], 0.1, 0).is_err());
    }

    #[test]
    fn adames_constant_fitness_keeps_mean() {
        let d = dist(vec![1.0, 2.0], 1.0, 3);
        let eps = NoiseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, -1.0]]).unwrap();
        let (next, state, log) =
            adames_step(&d, &eps, &[4.0; 3], &AdamState::new(2), &AdamEsConfig::default()).unwrap();
        assert_eq!(next.mean(), d.mean());
        assert_eq!(state.step, 2);
        assert_eq!(log.divergence, 0.0);
    }

    #[test]
    fn config_validation() {
        let mut es = EsConfig::default();
        assert!(es.validate().is_ok());
        es.population_size = 1;
        assert!(es.validate().is_err());
        let mut adam = AdamEsConfig {
            beta1: 1.0,
            ..AdamEsConfig::default()
        };
        assert!(adam.validate().is_err());
        adam.beta1 = 0.9;
        adam.es.noise_std = 0.0;
        assert!(adam.validate().is_err());
    }
}
