//! Gaussian search populations.
//!
//! A population is an isotropic (or diagonal) Gaussian around a search
//! center. Members are materialized as rows of a matrix so that a whole
//! population of parameter vectors can be evaluated and updated at once.

use std::f64::consts::{E, PI};

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A flat vector of finite parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ParameterVector(Vec<f64>);

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("parameter {i} is not finite ({})", values[i])));
        }
        Ok(Self(values))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for ParameterVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for ParameterVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<ParameterVector> for Vec<f64> {
    fn from(p: ParameterVector) -> Self {
        p.0
    }
}

/// Diagonal Gaussian search distribution with a fixed population size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationDistribution {
    mean: ParameterVector,
    std: Vec<f64>,
    size: usize,
}

impl PopulationDistribution {
    /// Isotropic distribution: `std` is broadcast over every dimension.
    pub fn isotropic(mean: ParameterVector, std: f64, size: usize) -> Result<Self> {
        let d = mean.len();
        Self::diagonal(mean, vec![std; d], size)
    }

    pub fn diagonal(mean: ParameterVector, std: Vec<f64>, size: usize) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::invalid("distribution dimension must be at least 1"));
        }
        if std.len() != mean.len() {
            return Err(Error::invalid(format!(
                "std has length {} but mean has length {}",
                std.len(),
                mean.len()
            )));
        }
        if let Some(s) = std.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::invalid(format!("std entries must be positive, got {s}")));
        }
        if size == 0 {
            return Err(Error::invalid("population size must be at least 1"));
        }
        Ok(Self { mean, std, size })
    }

    pub fn mean(&self) -> &ParameterVector {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Average of the per-dimension standard deviations.
    pub fn mean_std(&self) -> f64 {
        self.std.iter().sum::<f64>() / self.std.len() as f64
    }

    /// Same spread and size, new center.
    pub fn with_mean(&self, mean: ParameterVector) -> Result<Self> {
        Self::diagonal(mean, self.std.clone(), self.size)
    }
}

/// `n x d` standard-normal perturbations, one row per population member.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseMatrix(Array2<f64>);

impl NoiseMatrix {
    pub fn from_array(eps: Array2<f64>) -> Result<Self> {
        if eps.nrows() == 0 || eps.ncols() == 0 {
            return Err(Error::invalid("noise matrix must be non-empty"));
        }
        Ok(Self(eps))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::invalid("noise rows have unequal lengths"));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let eps = Array2::from_shape_vec((n, d), flat).map_err(|e| Error::invalid(e.to_string()))?;
        Self::from_array(eps)
    }

    pub fn view(&self) -> ndarray::ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }
}

/// Materialized population, row `i` is `mean + std * eps_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationMatrix(Array2<f64>);

impl PopulationMatrix {
    pub fn view(&self) -> ndarray::ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn member(&self, i: usize) -> ParameterVector {
        ParameterVector(self.0.row(i).to_vec())
    }

    pub fn members(&self) -> impl Iterator<Item = ParameterVector> + '_ {
        self.0.rows().into_iter().map(|r| ParameterVector(r.to_vec()))
    }
}

pub fn sample_noise<R: Rng + ?Sized>(rng: &mut R, n: usize, d: usize) -> Result<NoiseMatrix> {
    if n == 0 || d == 0 {
        return Err(Error::invalid(format!("cannot sample a {n}x{d} noise matrix")));
    }
    let eps = Array2::from_shape_simple_fn((n, d), || rng.sample(StandardNormal));
    Ok(NoiseMatrix(eps))
}

pub fn expand_population(dist: &PopulationDistribution, eps: &NoiseMatrix) -> Result<PopulationMatrix> {
    if eps.rows() != dist.size() || eps.cols() != dist.dim() {
        return Err(Error::invalid(format!(
            "noise shape {}x{} does not match population {}x{}",
            eps.rows(),
            eps.cols(),
            dist.size(),
            dist.dim()
        )));
    }
    let mean = Array1::from(dist.mean.0.clone());
    let std = Array1::from(dist.std.clone());
    Ok(PopulationMatrix(&eps.0 * &std + &mean))
}

/// The global network: the expectation of the population.
pub fn global_parameters(dist: &PopulationDistribution) -> ParameterVector {
    dist.mean.clone()
}

/// Differential entropy of the diagonal Gaussian, in nats.
pub fn population_entropy(dist: &PopulationDistribution) -> f64 {
    let per_unit = 0.5 * (2.0 * PI * E).ln();
    dist.std.iter().map(|s| s.ln() + per_unit).sum()
}

/// KL(from || to) between two diagonal Gaussians, in nats.
pub fn population_kl(from: &PopulationDistribution, to: &PopulationDistribution) -> Result<f64> {
    if from.dim() != to.dim() {
        return Err(Error::invalid(format!(
            "cannot compare distributions of dimension {} and {}",
            from.dim(),
            to.dim()
        )));
    }
    let kl = from
        .mean
        .0
        .iter()
        .zip(&to.mean.0)
        .zip(from.std.iter().zip(&to.std))
        .map(|((mf, mt), (sf, st))| {
            let dm = mf - mt;
            (st / sf).ln() + (sf * sf + dm * dm) / (2.0 * st * st) - 0.5
        })
        .sum::<f64>();
    // Rounding in the log term can leave tiny negatives for equal spreads.
    Ok(kl.max(0.0))
}
