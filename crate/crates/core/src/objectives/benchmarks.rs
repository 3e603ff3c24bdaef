//! Standard continuous test functions. All are minimized at value 0.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    Sphere,
    Rastrigin,
    Ackley,
    Rosenbrock,
}

impl Benchmark {
    pub const ALL: [Benchmark; 4] = [
        Benchmark::Sphere,
        Benchmark::Rastrigin,
        Benchmark::Ackley,
        Benchmark::Rosenbrock,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Sphere => "sphere",
            Benchmark::Rastrigin => "rastrigin",
            Benchmark::Ackley => "ackley",
            Benchmark::Rosenbrock => "rosenbrock",
        }
    }

    pub fn min_dimension(self) -> usize {
        match self {
            Benchmark::Rosenbrock => 2,
            _ => 1,
        }
    }

    /// Location of the global minimum in `d` dimensions.
    pub fn optimum(self, d: usize) -> Vec<f64> {
        match self {
            Benchmark::Rosenbrock => vec![1.0; d],
            _ => vec![0.0; d],
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Benchmark {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Benchmark::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown benchmark '{s}'")))
    }
}

pub fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|xi| xi * xi).sum()
}

pub fn rastrigin(x: &[f64]) -> f64 {
    10.0 * x.len() as f64 + x.iter().map(|xi| xi * xi - 10.0 * (2.0 * PI * xi).cos()).sum::<f64>()
}

/// Ackley with a = 20, b = 0.2, c = 2 pi.
pub fn ackley(x: &[f64]) -> f64 {
    let d = x.len() as f64;
    let sum_sq: f64 = x.iter().map(|xi| xi * xi).sum();
    let sum_cos: f64 = x.iter().map(|xi| (2.0 * PI * xi).cos()).sum();
    -20.0 * (-0.2 * (sum_sq / d).sqrt()).exp() - (sum_cos / d).exp() + 20.0 + E
}

pub fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

pub fn evaluate_benchmark(benchmark: Benchmark, x: &[f64]) -> Result<f64> {
    if x.len() < benchmark.min_dimension() {
        return Err(Error::invalid(format!(
            "{benchmark} needs at least {} dimensions, got {}",
            benchmark.min_dimension(),
            x.len()
        )));
    }
    Ok(match benchmark {
        Benchmark::Sphere => sphere(x),
        Benchmark::Rastrigin => rastrigin(x),
        Benchmark::Ackley => ackley(x),
        Benchmark::Rosenbrock => rosenbrock(x),
    })
}
