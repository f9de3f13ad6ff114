use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::pipeline::FrameTiming;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
    pub n: usize,
}

impl Aggregate {
    /// Standard error of the mean.
    pub fn sem(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.std / (self.n as f64).sqrt()
        }
    }
}

/// Mean and `n - 1` standard deviation, `None` for no values.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Some((mean, std))
}

pub fn aggregate(values: &[f64]) -> Option<Aggregate> {
    mean_std(values).map(|(mean, std)| Aggregate { mean, std, n: values.len() })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    write_text(path, &text)
}

/// `frame,reliability_ms,update_ms,total_ms` rows. Timing varies between
/// runs, so it lives apart from the deterministic artifacts.
pub fn write_timing_csv(path: &Path, label: &str, timings: &[FrameTiming]) -> Result<()> {
    let mut out = String::from("run,frame,reliability_ms,update_ms,total_ms\n");
    for t in timings {
        writeln!(out, "{label},{},{:.4},{:.4},{:.4}", t.frame, t.reliability_ms, t.update_ms, t.total_ms).expect("writing to a String");
    }
    write_text(path, &out)
}
