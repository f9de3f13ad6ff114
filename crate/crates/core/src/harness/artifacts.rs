use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Severity;
use crate::gridfusion::Costmap;
use crate::pnm;
use crate::scenegen::ScenarioConfig;

use super::config::{Method, SharedConfig};
use super::pipeline::{FrameTiming, RunOutput, SensorMetrics};
use super::report::{write_json, write_timing_csv};

pub const RUN_MANIFEST: &str = "run.json";

/// Everything `eval` needs from a run besides the costmap itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub method: Method,
    pub scenario: ScenarioConfig,
    /// Level the run is filed under in summaries.
    pub severity: Severity,
    /// Corruption seed of the dataset.
    pub seed: u64,
    pub frames: usize,
    pub config_hash: String,
    pub shared: SharedConfig,
    /// Hex SHA-256 of the model file, for `drm_rgf`.
    pub model_sha256: Option<String>,
    pub sensor: SensorMetrics,
    /// Relative to the run directory.
    pub artifacts: Vec<String>,
}

fn to_gray(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes the final grid, the binarized and inflated costmaps, timing and,
/// when kept, one reliability PGM per frame. Fills `manifest.artifacts`
/// and writes it last.
pub fn write_run(dir: &Path, out: &RunOutput, manifest: &mut RunManifest) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut names = vec![
        "grid.csv".to_string(),
        "grid.json".into(),
        "binary.pgm".into(),
        "binary.json".into(),
        "costmap.pgm".into(),
        "costmap.json".into(),
        "timing.csv".into(),
    ];
    out.grid.write(dir, "grid")?;
    out.binary.write(dir, "binary")?;
    out.costmap.write(dir, "costmap")?;
    write_timing_csv(&dir.join("timing.csv"), out.method.name(), &out.timings)?;
    if !out.reliability.is_empty() {
        let rel = dir.join("reliability");
        fs::create_dir_all(&rel).map_err(|e| Error::io(&rel, e))?;
        for (k, r) in out.reliability.iter().enumerate() {
            let name = format!("reliability/frame_{k:04}.pgm");
            let data: Vec<u8> = r.values().iter().map(|&v| to_gray(v)).collect();
            pnm::write_pgm8(&dir.join(&name), r.width(), r.height(), &data)?;
            names.push(name);
        }
    }
    manifest.artifacts = names;
    write_json(&dir.join(RUN_MANIFEST), manifest)?;
    let mut paths: Vec<PathBuf> = manifest.artifacts.iter().map(|n| dir.join(n)).collect();
    paths.push(dir.join(RUN_MANIFEST));
    Ok(paths)
}

/// A run directory read back for evaluation.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub manifest: RunManifest,
    pub costmap: Costmap,
    pub timings: Vec<FrameTiming>,
}

fn parse_timing(path: &Path) -> Result<Vec<FrameTiming>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |line: usize| Error::Format {
        path: path.to_path_buf(),
        message: format!("line {line} is not `run,frame,reliability_ms,update_ms,total_ms`"),
    };
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad(n + 1));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(n + 1));
        out.push(FrameTiming {
            frame: f[1].parse().map_err(|_| bad(n + 1))?,
            reliability_ms: num(f[2])?,
            update_ms: num(f[3])?,
            total_ms: num(f[4])?,
        });
    }
    Ok(out)
}

/// Loads a run directory, failing on the first missing artifact.
pub fn read_run(dir: &Path) -> Result<RunArtifacts> {
    let path = dir.join(RUN_MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| Error::json(&path, e))?;
    for name in &manifest.artifacts {
        let p = dir.join(name);
        if !p.exists() {
            return Err(Error::io(&p, std::io::Error::new(std::io::ErrorKind::NotFound, "listed in run.json but missing")));
        }
    }
    let costmap = Costmap::read(dir, "costmap")?;
    if costmap.spec != manifest.shared.grid {
        return Err(Error::SpecMismatch(format!("{}: costmap grid differs from the recorded config", dir.display())));
    }
    let timings = parse_timing(&dir.join("timing.csv"))?;
    Ok(RunArtifacts { manifest, costmap, timings })
}
