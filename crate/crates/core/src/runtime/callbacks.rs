//! Hooks invoked once per training iteration.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::ParameterVector;
use crate::runtime::logger::MetricRecord;

/// Checkpoint file format version.
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CallbackDecision {
    pub stop: bool,
    pub save: bool,
}

/// What a callback sees after an update.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    /// Zero-based iteration that just finished.
    pub step: usize,
    /// Records emitted by this iteration.
    pub records: &'a [MetricRecord],
    /// Global parameters after the update.
    pub params: &'a ParameterVector,
}

pub trait Callback {
    fn on_step(&mut self, ctx: &StepContext<'_>) -> Result<CallbackDecision>;
}

impl<F> Callback for F
where
    F: FnMut(&StepContext<'_>) -> Result<CallbackDecision>,
{
    fn on_step(&mut self, ctx: &StepContext<'_>) -> Result<CallbackDecision> {
        self(ctx)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    /// Number of completed iterations when the checkpoint was written.
    pub step: u64,
    pub params: ParameterVector,
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ckpt: Checkpoint = serde_json::from_str(&text)?;
    if ckpt.version != CHECKPOINT_VERSION {
        return Err(Error::invalid(format!(
            "unsupported checkpoint version {} in {}",
            ckpt.version,
            path.display()
        )));
    }
    Ok(ckpt)
}

/// Writes the global parameters every `every` iterations.
#[derive(Debug, Clone)]
pub struct CheckpointCallback {
    every: usize,
    dir: PathBuf,
}

impl CheckpointCallback {
    pub fn new(every: usize, dir: impl Into<PathBuf>) -> Result<Self> {
        if every == 0 {
            return Err(Error::invalid("checkpoint interval must be at least 1"));
        }
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let probe = dir.join(".write-probe");
        fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
        fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))?;
        Ok(Self { every, dir })
    }

    pub fn path_for(&self, completed: u64) -> PathBuf {
        self.dir.join(format!("checkpoint-{completed:06}.json"))
    }
}

impl Callback for CheckpointCallback {
    fn on_step(&mut self, ctx: &StepContext<'_>) -> Result<CallbackDecision> {
        let completed = ctx.step as u64 + 1;
        if !completed.is_multiple_of(self.every as u64) {
            return Ok(CallbackDecision::default());
        }
        let ckpt = Checkpoint {
            version: CHECKPOINT_VERSION,
            step: completed,
            params: ctx.params.clone(),
        };
        let path = self.path_for(completed);
        fs::write(&path, serde_json::to_vec_pretty(&ckpt)?).map_err(|e| Error::io(&path, e))?;
        Ok(CallbackDecision {
            stop: false,
            save: true,
        })
    }
}

/// Stops once a metric has gone `patience` consecutive iterations without
/// improving on its best value by at least `threshold`.
///
/// The first observation only sets the baseline.
#[derive(Debug, Clone)]
pub struct EarlyStopCallback {
    metric: String,
    threshold: f64,
    patience: usize,
    maximize: bool,
    best: Option<f64>,
    stale: usize,
}

impl EarlyStopCallback {
    pub fn new(metric: impl Into<String>, threshold: f64, patience: usize) -> Result<Self> {
        if patience == 0 {
            return Err(Error::invalid("patience must be at least 1"));
        }
        if threshold.is_nan() {
            return Err(Error::invalid("threshold must not be NaN"));
        }
        Ok(Self {
            metric: metric.into(),
            threshold,
            patience,
            maximize: true,
            best: None,
            stale: 0,
        })
    }

    /// Treat decreases as improvements.
    pub fn minimizing(mut self) -> Self {
        self.maximize = false;
        self
    }

    /// Feed one value; returns true when training should stop.
    pub fn observe(&mut self, value: f64) -> bool {
        let Some(best) = self.best else {
            self.best = Some(value);
            return false;
        };
        let gain = if self.maximize { value - best } else { best - value };
        if gain >= self.threshold {
            self.best = Some(value);
            self.stale = 0;
        } else {
            self.stale += 1;
        }
        self.stale >= self.patience
    }
}

impl Callback for EarlyStopCallback {
    fn on_step(&mut self, ctx: &StepContext<'_>) -> Result<CallbackDecision> {
        let value = ctx
            .records
            .iter()
            .find(|r| r.name == self.metric)
            .map(|r| r.value)
            .ok_or_else(|| Error::invalid(format!("unknown metric '{}'", self.metric)))?;
        Ok(CallbackDecision {
            stop: self.observe(value),
            save: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stop_index(cb: &mut EarlyStopCallback, values: &[f64]) -> Option<usize> {
        values.iter().position(|v| cb.observe(*v))
    }

    #[test]
    fn improving_metric_never_stops() {
        let mut cb = EarlyStopCallback::new("m", 0.0, 1).unwrap();
        let values: Vec<f64> = (0..50).map(f64::from).collect();
        assert_eq!(stop_index(&mut cb, &values), None);
    }

    #[test]
    fn constant_metric_stops_on_third_plateau_iteration() {
        let mut cb = EarlyStopCallback::new("m", 1e-9, 3).unwrap();
        // baseline, then stale 1, 2, 3
        assert_eq!(stop_index(&mut cb, &[1.0; 10]), Some(3));
        let mut cb = EarlyStopCallback::new("m", 1e-9, 3).unwrap();
        assert_eq!(stop_index(&mut cb, &[1.0, 2.0, 3.0, 3.0, 3.0, 3.0, 3.0]), Some(5));
    }

    #[test]
    fn infinite_threshold_stops_after_patience() {
        let mut cb = EarlyStopCallback::new("m", f64::INFINITY, 4).unwrap();
        let values: Vec<f64> = (0..10).map(|i| f64::from(i) * 100.0).collect();
        assert_eq!(stop_index(&mut cb, &values), Some(4));
    }

    #[test]
    fn minimizing_mode() {
        let mut cb = EarlyStopCallback::new("m", 0.5, 2).unwrap().minimizing();
        assert_eq!(stop_index(&mut cb, &[10.0, 9.0, 8.9, 8.8]), Some(3));
    }

    #[test]
    fn unknown_metric_is_rejected() {
        let mut cb = EarlyStopCallback::new("nope", 0.0, 1).unwrap();
        let params = ParameterVector::zeros(1);
        let ctx = StepContext {
            step: 0,
            records: &[],
            params: &params,
        };
        assert!(matches!(cb.on_step(&ctx), Err(Error::InvalidArgument(_))));
        assert!(EarlyStopCallback::new("m", 0.0, 0).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut cb = CheckpointCallback::new(2, dir.path().join("ckpt")).unwrap();
        let params = ParameterVector::new(vec![0.1, 1.0 / 3.0, -2e-300]).unwrap();
        for step in 0..5 {
            let d = cb
                .on_step(&StepContext {
                    step,
                    records: &[],
                    params: &params,
                })
                .unwrap();
            assert_eq!(d.save, step % 2 == 1);
        }
        let loaded = load_checkpoint(cb.path_for(4)).unwrap();
        assert_eq!(loaded.step, 4);
        for (a, b) in loaded.params.as_slice().iter().zip(params.as_slice()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert!(!cb.path_for(6).exists());
    }
}
