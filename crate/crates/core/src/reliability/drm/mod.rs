//! The learned reliability estimator: a small encoder-decoder of depthwise
//! separable convolutions over RGB, depth and temporal depth difference.

mod layers;
mod net;
mod train;

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_shape, Error, Result};
use crate::frame::{DepthFrame, ReliabilityMap, RgbFrame, RANGE_MAX};

pub use layers::{resize_bilinear, Tensor};
pub use net::{DrmNet, DrmSchedule, ForwardCache, ParamCounts, INPUT_CHANNELS};
pub use train::{batch_gradient, build_samples, drm_train, evaluate_loss, gradient_check, l1_loss, GradCheck, Optimizer, TrainConfig, TrainSample, TrainedModel};

use super::targets::TargetMode;

/// Total parameter count of the reference network, whose decoder
/// layout is not recoverable; ours differs only in the decoder.
pub const REFERENCE_TOTAL_PARAMS: usize = 61_936;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub schedule: DrmSchedule,
    pub counts: ParamCounts,
    pub reference_total: usize,
    pub seed: u64,
    pub target_mode: TargetMode,
    /// `[width, height]` the network runs at.
    pub working_resolution: [usize; 2],
    pub epochs: usize,
}

/// Network weights plus the metadata written in the model file header.
#[derive(Debug, Clone, PartialEq)]
pub struct DrmModel {
    pub net: DrmNet,
    pub meta: ModelMeta,
}

impl DrmModel {
    pub fn new(net: DrmNet, seed: u64, target_mode: TargetMode, working_resolution: [usize; 2], epochs: usize) -> Self {
        let meta = ModelMeta {
            schedule: net.schedule,
            counts: net.schedule.param_counts(),
            reference_total: REFERENCE_TOTAL_PARAMS,
            seed,
            target_mode,
            working_resolution,
            epochs,
        };
        Self { net, meta }
    }

    /// Serialized form: one JSON header line, `\n`, then little-endian
    /// `f32` weights.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec(&self.meta).expect("metadata serializes");
        out.push(b'\n');
        for w in &self.net.weights {
            out.extend_from_slice(&(*w as f32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::MalformedModel("missing header line".into()))?;
        let meta: ModelMeta = serde_json::from_slice(&bytes[..nl])
            .map_err(|e| Error::MalformedModel(format!("bad header: {e}")))?;
        let blob = &bytes[nl + 1..];
        let expect = meta.schedule.param_counts().total;
        if blob.len() != expect * 4 {
            return Err(Error::MalformedModel(format!(
                "schedule needs {expect} weights ({} bytes), blob has {} bytes",
                expect * 4,
                blob.len()
            )));
        }
        if meta.counts != meta.schedule.param_counts() {
            return Err(Error::MalformedModel("header counts disagree with schedule".into()));
        }
        let weights = blob
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        let net = DrmNet {
            schedule: meta.schedule,
            weights,
        };
        net.check()?;
        Ok(Self { net, meta })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Per-pixel `|n_t - n_{t-1}|` of range-normalized depth, invalid samples
/// reading as 0. Without a previous frame the difference is 0.
pub fn temporal_diff(depth: &DepthFrame, prev: Option<&DepthFrame>) -> Result<Vec<f64>> {
    let Some(prev) = prev else {
        return Ok(vec![0.0; depth.len()]);
    };
    check_shape(depth.dims(), prev.dims())?;
    Ok(depth
        .values()
        .iter()
        .zip(prev.values())
        .map(|(a, b)| ((a - b) / RANGE_MAX).abs())
        .collect())
}

/// Nearest-neighbour source index for resampling `n_in` samples to `n_out`.
fn nearest(o: usize, n_in: usize, n_out: usize) -> usize {
    (((o as f64 + 0.5) * n_in as f64 / n_out as f64) as usize).min(n_in - 1)
}

/// Nearest-neighbour resampling of a row-major plane.
pub fn resample_nearest(src: &[f64], w: usize, h: usize, wo: usize, ho: usize) -> Vec<f64> {
    let xs: Vec<usize> = (0..wo).map(|x| nearest(x, w, wo)).collect();
    let mut out = Vec::with_capacity(wo * ho);
    for y in 0..ho {
        let row = nearest(y, h, ho) * w;
        out.extend(xs.iter().map(|&x| src[row + x]));
    }
    out
}

/// Builds the normalized 5-channel network input at `working` resolution.
pub fn network_input(rgb: &RgbFrame, depth: &DepthFrame, tdiff: &[f64], working: [usize; 2]) -> Result<Tensor> {
    check_shape(depth.dims(), rgb.dims())?;
    check_shape((depth.len(), 1), (tdiff.len(), 1))?;
    let (w, h) = depth.dims();
    let [wo, ho] = working;
    if wo == 0 || ho == 0 {
        return Err(Error::config("working_resolution", "must be nonzero"));
    }
    let mut planes: Vec<Vec<f64>> = (0..3).map(|c| rgb.pixels().iter().map(|p| p[c]).collect()).collect();
    planes.push(depth.values().iter().map(|d| d / RANGE_MAX).collect());
    planes.push(tdiff.to_vec());
    let mut t = Tensor::zeros(INPUT_CHANNELS, ho, wo);
    for (c, p) in planes.iter().enumerate() {
        let r = if (wo, ho) == (w, h) { p.clone() } else { resample_nearest(p, w, h, wo, ho) };
        t.channel_mut(c).copy_from_slice(&r);
    }
    Ok(t)
}

/// Reliability at native resolution, strictly inside `(0, 1)`.
pub fn drm_forward(model: &DrmModel, rgb: &RgbFrame, depth: &DepthFrame, tdiff: &[f64]) -> Result<ReliabilityMap> {
    let input = network_input(rgb, depth, tdiff, model.meta.working_resolution)?;
    let out = model.net.predict(input)?;
    let (w, h) = depth.dims();
    let up = if (out.w, out.h) == (w, h) { out } else { resize_bilinear(&out, h, w) };
    let lo = f64::MIN_POSITIVE;
    let hi = 1.0 - f64::EPSILON;
    ReliabilityMap::from_values(w, h, up.data.into_iter().map(|v| v.clamp(lo, hi)).collect())
}
