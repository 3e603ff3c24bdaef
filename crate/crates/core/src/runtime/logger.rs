//! JSON-lines metric log, one [`MetricRecord`] per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Section {
    Reward,
    Loss,
    Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub step: u64,
    pub section: Section,
    pub name: String,
    pub value: f64,
}

impl MetricRecord {
    pub fn new(step: u64, section: Section, name: &str, value: f64) -> Self {
        Self {
            step,
            section,
            name: name.to_owned(),
            value,
        }
    }
}

/// Appends records to a file, or only keeps them when no path is given.
#[derive(Debug)]
pub struct MetricLogger {
    path: Option<PathBuf>,
    writer: Option<BufWriter<File>>,
    records: Vec<MetricRecord>,
}

impl MetricLogger {
    pub fn in_memory() -> Self {
        Self {
            path: None,
            writer: None,
            records: Vec::new(),
        }
    }

    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Self {
            writer: Some(BufWriter::new(file)),
            path: Some(path),
            records: Vec::new(),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn records(&self) -> &[MetricRecord] {
        &self.records
    }

    pub fn log(&mut self, record: MetricRecord) -> Result<()> {
        if !record.value.is_finite() {
            return Err(Error::invalid(format!(
                "metric {} is not finite ({})",
                record.name, record.value
            )));
        }
        if let (Some(w), Some(path)) = (self.writer.as_mut(), self.path.as_ref()) {
            serde_json::to_writer(&mut *w, &record)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        self.records.push(record);
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        if let (Some(w), Some(path)) = (self.writer.as_mut(), self.path.as_ref()) {
            w.flush().map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }
}

pub fn read_metrics(path: impl AsRef<Path>) -> Result<Vec<MetricRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}
