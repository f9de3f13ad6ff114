use crate::error::{check_shape, Result};
use crate::frame::{DepthFrame, ReliabilityMap, RgbFrame};

use super::targets::lower_median;

/// Tunables of the hand-built reliability estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicParams {
    /// Relative scale of the deviation from the local median.
    pub spatial_scale: f64,
    /// Relative scale of the frame-to-frame depth change.
    pub temporal_scale: f64,
    /// Minimum channel level where the saturation penalty starts.
    pub saturation_start: f64,
    /// Minimum channel level where the penalty reaches its floor.
    pub saturation_full: f64,
    /// Saturation factor at and above `saturation_full`.
    pub saturation_floor: f64,
}

impl Default for HeuristicParams {
    fn default() -> Self {
        Self {
            spatial_scale: 0.05,
            temporal_scale: 0.1,
            saturation_start: 0.8,
            saturation_full: 0.95,
            saturation_floor: 0.2,
        }
    }
}

/// Factor in `[floor, 1]` that falls linearly as the darkest channel
/// approaches white.
pub fn saturation_factor(rgb: [f64; 3], p: &HeuristicParams) -> f64 {
    let m = rgb[0].min(rgb[1]).min(rgb[2]);
    if m <= p.saturation_start {
        1.0
    } else if m >= p.saturation_full {
        p.saturation_floor
    } else {
        let s = (m - p.saturation_start) / (p.saturation_full - p.saturation_start);
        1.0 - s * (1.0 - p.saturation_floor)
    }
}

/// Product of validity, local-consistency, temporal-consistency and
/// saturation factors.
pub fn heuristic_reliability(rgb: &RgbFrame, depth: &DepthFrame, prev_depth: Option<&DepthFrame>) -> Result<ReliabilityMap> {
    heuristic_reliability_with(rgb, depth, prev_depth, &HeuristicParams::default())
}

pub fn heuristic_reliability_with(
    rgb: &RgbFrame,
    depth: &DepthFrame,
    prev_depth: Option<&DepthFrame>,
    p: &HeuristicParams,
) -> Result<ReliabilityMap> {
    check_shape(depth.dims(), rgb.dims())?;
    if let Some(prev) = prev_depth {
        check_shape(depth.dims(), prev.dims())?;
    }
    let (w, h) = depth.dims();
    let mut out = vec![0.0; w * h];
    let mut window = Vec::with_capacity(9);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let Some(d) = depth.get(i) else { continue };
            window.clear();
            for yy in y.saturating_sub(1)..(y + 2).min(h) {
                for xx in x.saturating_sub(1)..(x + 2).min(w) {
                    if let Some(v) = depth.get(yy * w + xx) {
                        window.push(v);
                    }
                }
            }
            let med = lower_median(&mut window);
            let spatial = (-((d - med) / (p.spatial_scale * d)).powi(2)).exp();
            let temporal = match prev_depth.and_then(|f| f.get(i)) {
                Some(q) => (-(d - q).abs() / (p.temporal_scale * d)).exp(),
                None => 1.0,
            };
            out[i] = spatial * temporal * saturation_factor(rgb.get(i), p);
        }
    }
    ReliabilityMap::from_values(w, h, out)
}
