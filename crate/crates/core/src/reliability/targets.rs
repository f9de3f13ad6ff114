use serde::{Deserialize, Serialize};

use crate::error::{check_shape, Error, Result};
use crate::frame::{DepthFrame, ReliabilityMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetMode {
    Binary,
    Soft,
}

impl std::str::FromStr for TargetMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(TargetMode::Binary),
            "soft" => Ok(TargetMode::Soft),
            other => Err(Error::config("target", format!("expected `binary` or `soft`, got `{other}`"))),
        }
    }
}

/// Agreement tolerance at reference depth `d`.
#[inline]
pub fn epsilon(d: f64) -> f64 {
    0.02 * d
}

/// Soft-target decay scale; equal to the agreement tolerance.
#[inline]
pub fn sigma(d: f64) -> f64 {
    epsilon(d)
}

/// Supervision map. Pixels without a valid measurement or reference are 0
/// in both modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityTarget {
    pub mode: TargetMode,
    map: ReliabilityMap,
}

impl ReliabilityTarget {
    pub fn values(&self) -> &[f64] {
        self.map.values()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.map.dims()
    }

    pub fn as_map(&self) -> &ReliabilityMap {
        &self.map
    }

    /// Positive-class mask of a binary target.
    pub fn labels(&self) -> Vec<bool> {
        self.values().iter().map(|&v| v >= 0.5).collect()
    }
}

fn build(
    measured: &DepthFrame,
    reference: &DepthFrame,
    mode: TargetMode,
    score: impl Fn(f64, f64) -> f64,
) -> Result<ReliabilityTarget> {
    check_shape(reference.dims(), measured.dims())?;
    let (w, h) = measured.dims();
    let values = (0..measured.len())
        .map(|i| match (measured.get(i), reference.get(i)) {
            (Some(d), Some(r)) => score(d, r),
            _ => 0.0,
        })
        .collect();
    Ok(ReliabilityTarget {
        mode,
        map: ReliabilityMap::from_values(w, h, values)?,
    })
}

/// 1 where the measurement is valid and within `epsilon(D*)` of the
/// reference, else 0.
pub fn binary_target(measured: &DepthFrame, reference: &DepthFrame) -> Result<ReliabilityTarget> {
    build(measured, reference, TargetMode::Binary, |d, r| {
        if (d - r).abs() < epsilon(r) {
            1.0
        } else {
            0.0
        }
    })
}

/// `exp(-|D - D*| / sigma(D*))` where both are valid, else 0.
pub fn soft_target(measured: &DepthFrame, reference: &DepthFrame) -> Result<ReliabilityTarget> {
    build(measured, reference, TargetMode::Soft, |d, r| (-(d - r).abs() / sigma(r)).exp())
}

/// Lower median of a non-empty slice.
pub(crate) fn lower_median(values: &mut [f64]) -> f64 {
    let k = (values.len() - 1) / 2;
    let (_, m, _) = values.select_nth_unstable_by(k, |a, b| a.total_cmp(b));
    *m
}

/// Per-pixel temporal median over a pixel-aligned window. A pixel needs at
/// least `ceil(W / 2)` valid samples; even counts take the lower median.
pub fn reference_depth(frames: &[DepthFrame]) -> Result<DepthFrame> {
    if frames.len() < 3 {
        return Err(Error::Domain(format!("reference window needs at least 3 frames, got {}", frames.len())));
    }
    let (w, h) = frames[0].dims();
    for f in frames {
        check_shape((w, h), f.dims())?;
    }
    let need = frames.len().div_ceil(2);
    let mut out = DepthFrame::invalid(w, h);
    let mut buf = Vec::with_capacity(frames.len());
    for i in 0..w * h {
        buf.clear();
        buf.extend(frames.iter().filter_map(|f| f.get(i)));
        if buf.len() >= need {
            out.set(i, Some(lower_median(&mut buf)));
        }
    }
    Ok(out)
}

/// Mean absolute difference between a prediction and a target.
pub fn drm_loss(pred: &ReliabilityMap, target: &ReliabilityTarget) -> Result<f64> {
    check_shape(target.dims(), pred.dims())?;
    super::drm::l1_loss(pred.values(), target.values())
}
