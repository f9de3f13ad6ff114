use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::Baseline;
use crate::error::{Error, Result};
use crate::evalsuite::{auprc, default_spike_threshold, f1_at, PrMetrics};
use crate::frame::{DepthFrame, ReliabilityMap, RgbFrame};
use crate::gridfusion::{binarize, inflate, Costmap, OccupancyGrid};
use crate::reliability::drm::{drm_forward, temporal_diff, DrmModel};
use crate::reliability::{binary_target, heuristic_reliability};
use crate::scenegen::{CameraIntrinsics, Pose, SimFrame};

use super::config::{Method, SharedConfig};

/// Wall-clock split of one frame, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameTiming {
    pub frame: usize,
    pub reliability_ms: f64,
    pub update_ms: f64,
    pub total_ms: f64,
}

/// Depth quality of a pixel population against the clean reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamMetrics {
    pub pixels: usize,
    pub hole_rate: f64,
    pub spike_rate: f64,
    /// `None` with no jointly valid pixel.
    pub rmse: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
struct StreamAccum {
    pixels: usize,
    holes: usize,
    joint: usize,
    spikes: usize,
    sq: f64,
}

impl StreamAccum {
    fn add(&mut self, d: Option<f64>, reference: Option<f64>) {
        self.pixels += 1;
        let Some(d) = d else {
            self.holes += 1;
            return;
        };
        if let Some(r) = reference {
            self.joint += 1;
            self.sq += (d - r) * (d - r);
            if (d - r).abs() > default_spike_threshold(r) {
                self.spikes += 1;
            }
        }
    }

    fn finish(&self) -> StreamMetrics {
        let frac = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        StreamMetrics {
            pixels: self.pixels,
            hole_rate: frac(self.holes, self.pixels),
            spike_rate: frac(self.spikes, self.joint),
            rmse: (self.joint > 0).then(|| (self.sq / self.joint as f64).sqrt()),
        }
    }
}

/// Sensor-level summary of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorMetrics {
    /// The corrupted stream as captured.
    pub raw: StreamMetrics,
    /// The pixels the method fuses: weight above `tau` in its own stream.
    pub accepted: StreamMetrics,
    /// Only for methods with a continuous reliability map.
    pub pr: Option<PrMetrics>,
}

/// Per-frame reliability source.
enum Estimator<'a> {
    Drm(&'a DrmModel),
    Heuristic,
    Baseline(Baseline),
}

/// The online loop: estimate reliability, fuse, binarize with hysteresis.
/// Feeding frames one at a time is the same as `run_method` over the slice.
pub struct Pipeline<'a> {
    pub method: Method,
    shared: SharedConfig,
    intrinsics: CameraIntrinsics,
    estimator: Estimator<'a>,
    grid: OccupancyGrid,
    binary: Option<Costmap>,
    prev_depth: Option<DepthFrame>,
    raw: StreamAccum,
    accepted: StreamAccum,
    scores: Vec<f64>,
    labels: Vec<bool>,
    timings: Vec<FrameTiming>,
    keep_reliability: bool,
    reliability: Vec<ReliabilityMap>,
}

/// Final state of a finished run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub method: Method,
    pub grid: OccupancyGrid,
    /// Hysteresis output before inflation.
    pub binary: Costmap,
    pub costmap: Costmap,
    pub sensor: SensorMetrics,
    pub timings: Vec<FrameTiming>,
    /// Filled when requested.
    pub reliability: Vec<ReliabilityMap>,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

impl<'a> Pipeline<'a> {
    pub fn new(method: Method, shared: &SharedConfig, intrinsics: CameraIntrinsics, model: Option<&'a DrmModel>) -> Result<Self> {
        shared.validate()?;
        let estimator = match (method, method.baseline()) {
            (Method::DrmRgf, _) => Estimator::Drm(model.ok_or_else(|| Error::config("model", "drm_rgf needs a trained model"))?),
            (Method::HeuristicRgf, _) => Estimator::Heuristic,
            (_, Some(kind)) => Estimator::Baseline(Baseline::new(kind, shared.baselines)?),
            (_, None) => unreachable!("every other method is a baseline"),
        };
        Ok(Self {
            method,
            shared: shared.clone(),
            intrinsics,
            estimator,
            grid: OccupancyGrid::new(shared.grid)?,
            binary: None,
            prev_depth: None,
            raw: StreamAccum::default(),
            accepted: StreamAccum::default(),
            scores: Vec::new(),
            labels: Vec::new(),
            timings: Vec::new(),
            keep_reliability: false,
            reliability: Vec::new(),
        })
    }

    pub fn keep_reliability(mut self, keep: bool) -> Self {
        self.keep_reliability = keep;
        self
    }

    /// Processes one frame. `clean` is the reference used only for metrics.
    pub fn step(&mut self, rgb: &RgbFrame, depth: &DepthFrame, clean: &DepthFrame, pose: &Pose) -> Result<()> {
        let t0 = Instant::now();
        let (fused, weights) = match &mut self.estimator {
            Estimator::Drm(model) => {
                let tdiff = temporal_diff(depth, self.prev_depth.as_ref())?;
                (depth.clone(), drm_forward(model, rgb, depth, &tdiff)?)
            }
            Estimator::Heuristic => (depth.clone(), heuristic_reliability(rgb, depth, self.prev_depth.as_ref())?),
            Estimator::Baseline(b) => b.process(depth)?,
        };
        let reliability_ms = ms(t0);
        let t1 = Instant::now();
        self.grid.fuse_frame(&fused, &weights, pose, &self.intrinsics, &self.shared.fusion)?;
        let binary = binarize(&self.grid, self.binary.as_ref())?;
        self.binary = Some(binary);
        let update_ms = ms(t1);

        let tau = self.shared.fusion.tau;
        for i in 0..depth.len() {
            let r = clean.get(i);
            self.raw.add(depth.get(i), r);
            if weights.get(i) > tau {
                self.accepted.add(fused.get(i), r);
            }
        }
        if self.method.has_reliability_map() {
            let target = binary_target(depth, clean)?;
            self.scores.extend_from_slice(weights.values());
            self.labels.extend(target.values().iter().map(|&v| v == 1.0));
        }
        if self.keep_reliability {
            self.reliability.push(weights);
        }
        self.prev_depth = Some(depth.clone());
        self.timings.push(FrameTiming {
            frame: self.timings.len(),
            reliability_ms,
            update_ms,
            total_ms: ms(t0),
        });
        Ok(())
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    pub fn finish(self) -> Result<RunOutput> {
        let binary = match self.binary {
            Some(b) => b,
            None => binarize(&self.grid, None)?,
        };
        let costmap = inflate(&binary, self.shared.inflation_radius)?;
        let tau = self.shared.fusion.tau;
        let pr = if self.method.has_reliability_map() {
            Some(PrMetrics {
                auprc: auprc(&self.scores, &self.labels)?,
                f1: f1_at(&self.scores, &self.labels, tau)?,
                threshold: tau,
            })
        } else {
            None
        };
        Ok(RunOutput {
            method: self.method,
            grid: self.grid,
            binary,
            costmap,
            sensor: SensorMetrics {
                raw: self.raw.finish(),
                accepted: self.accepted.finish(),
                pr,
            },
            timings: self.timings,
            reliability: self.reliability,
        })
    }
}

/// Runs one method over a simulated sequence.
pub fn run_method(
    frames: &[SimFrame],
    intrinsics: &CameraIntrinsics,
    method: Method,
    model: Option<&DrmModel>,
    shared: &SharedConfig,
    keep_reliability: bool,
) -> Result<RunOutput> {
    let mut p = Pipeline::new(method, shared, *intrinsics, model)?.keep_reliability(keep_reliability);
    for f in frames {
        p.step(&f.rgb, &f.depth, &f.clean, &f.pose)?;
    }
    p.finish()
}
