//! Experiment plumbing: configs, the per-frame pipeline, the method matrix
//! and report emission.

mod artifacts;
mod config;
mod experiment;
mod pipeline;
mod report;

use crate::error::{Error, Result};
use crate::frame::Severity;
use crate::reliability::drm::{build_samples, drm_train, TrainConfig, TrainSample, TrainedModel};
use crate::scenegen::{build_world, resample, simulate_sequence, ScenarioConfig, SimFrame, World};

pub use artifacts::{read_run, write_run, RunArtifacts, RunManifest, RUN_MANIFEST};
pub use config::{ExperimentConfig, Method, SharedConfig, TrainingSetup};
pub use experiment::{costmap_metrics, evaluate_run, run_experiment, sensor_metric_map, summarize, ExperimentReport, RunRecord, TableRow};
pub use pipeline::{run_method, FrameTiming, Pipeline, RunOutput, SensorMetrics, StreamMetrics};
pub use report::{aggregate, mean_std, write_timing_csv, Aggregate};

/// Seed of the corruption stream for one `(severity, seed)` cell, so that
/// severities never share noise draws.
pub fn corruption_seed(severity: Severity, seed: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (severity.index() as u64 + 1)
}

/// The scenario world with every glare patch at `severity` (or as authored
/// when `None`), and its simulated frames.
pub fn simulate_scenario(
    scenario: &ScenarioConfig,
    severity: Option<Severity>,
    seed: u64,
    frames: Option<usize>,
) -> Result<(World, Vec<SimFrame>)> {
    let base = build_world(scenario)?;
    let world = match severity {
        Some(l) => base.with_patch_severity(l),
        None => base,
    };
    let mut poses = scenario.poses()?;
    if let Some(n) = frames {
        poses = resample(&poses, n);
    }
    let params = scenario.corruption.clone().with_seed(seed);
    let sim = simulate_sequence(&world, &poses, &scenario.camera, &params)?;
    Ok((world, sim))
}

/// Training samples for the frames at `indices`, each paired with its true
/// predecessor so the temporal channel matches online use.
pub fn samples_at(frames: &[SimFrame], indices: &[usize], cfg: &TrainConfig) -> Result<Vec<TrainSample>> {
    let mut out = Vec::with_capacity(indices.len());
    for &i in indices {
        let f = frames.get(i).ok_or_else(|| Error::Domain(format!("frame {i} out of range")))?;
        let mut s = if i == 0 {
            build_samples(&[(&f.rgb, &f.depth, &f.clean)], cfg.target_mode, cfg.working_resolution)?
        } else {
            let p = &frames[i - 1];
            build_samples(&[(&p.rgb, &p.depth, &p.clean), (&f.rgb, &f.depth, &f.clean)], cfg.target_mode, cfg.working_resolution)?
        };
        out.push(s.pop().expect("one sample per frame"));
    }
    Ok(out)
}

/// Evenly spaced indices, `n` out of `len`.
pub fn spread(len: usize, n: usize) -> Vec<usize> {
    let n = n.min(len);
    (0..n).map(|k| k * len / n.max(1)).collect()
}

/// Simulates the training scenario at each severity and trains on evenly
/// spaced frames.
pub fn train_from_setup(setup: &TrainingSetup) -> Result<TrainedModel> {
    let scenario = ScenarioConfig::load(&setup.scenario)?;
    let mut samples = Vec::new();
    for &l in &setup.severities {
        let (_, frames) = simulate_scenario(&scenario, Some(l), corruption_seed(l, setup.seed), None)?;
        samples.extend(samples_at(&frames, &spread(frames.len(), setup.frames), &setup.config)?);
    }
    drm_train(&samples, &setup.config)
}
