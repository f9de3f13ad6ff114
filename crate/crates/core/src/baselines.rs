//! Comparison preprocessors. Each turns a raw depth frame into modified
//! depth plus binary weights for the shared fusion step.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{DepthFrame, ReliabilityMap, RANGE_MAX, RANGE_MIN};
use crate::reliability::lower_median;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Naive,
    ValidityRange,
    SpatialMedian,
    TemporalReject,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] = [
        BaselineKind::Naive,
        BaselineKind::ValidityRange,
        BaselineKind::SpatialMedian,
        BaselineKind::TemporalReject,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Naive => "naive",
            BaselineKind::ValidityRange => "validity_range",
            BaselineKind::SpatialMedian => "spatial_median",
            BaselineKind::TemporalReject => "temporal_reject",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config("baseline", format!("unknown baseline `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineParams {
    pub trusted_range: [f64; 2],
    pub median_window: usize,
    pub temporal_window: usize,
    /// Relative agreement tolerance, as a fraction of the newest depth.
    pub agreement_tol: f64,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self {
            trusted_range: [0.3, 5.0],
            median_window: 3,
            temporal_window: 3,
            agreement_tol: 0.02,
        }
    }
}

impl BaselineParams {
    pub fn validate(&self) -> Result<()> {
        check_trusted_range(self.trusted_range)?;
        check_window(self.median_window)?;
        if self.temporal_window < 2 {
            return Err(Error::config("baselines.temporal_window", "must be at least 2"));
        }
        if !(self.agreement_tol >= 0.0) {
            return Err(Error::config("baselines.agreement_tol", "must be non-negative"));
        }
        Ok(())
    }
}

fn check_trusted_range([lo, hi]: [f64; 2]) -> Result<()> {
    if !(lo < hi) {
        return Err(Error::config("baselines.trusted_range", "inverted range"));
    }
    if lo < RANGE_MIN || hi > RANGE_MAX {
        return Err(Error::config(
            "baselines.trusted_range",
            format!("must lie within [{RANGE_MIN}, {RANGE_MAX}]"),
        ));
    }
    Ok(())
}

fn check_window(window: usize) -> Result<()> {
    if window.is_multiple_of(2) {
        return Err(Error::config("baselines.median_window", "must be odd"));
    }
    Ok(())
}

/// Weight 1 on valid pixels, 0 elsewhere.
pub fn naive_weights(depth: &DepthFrame) -> ReliabilityMap {
    let (w, h) = depth.dims();
    let values = depth.validity().iter().map(|&v| if v { 1.0 } else { 0.0 }).collect();
    ReliabilityMap::from_values(w, h, values).expect("binary weights lie in [0, 1]")
}

/// Invalidates pixels outside the inclusive `trusted_range`.
pub fn validity_range_gate(depth: &DepthFrame, trusted_range: [f64; 2]) -> Result<DepthFrame> {
    check_trusted_range(trusted_range)?;
    let mut out = depth.clone();
    for i in 0..depth.len() {
        if let Some(d) = depth.get(i) {
            if d < trusted_range[0] || d > trusted_range[1] {
                out.set(i, None);
            }
        }
    }
    Ok(out)
}

/// Lower median over the valid pixels of a `window x window` neighbourhood,
/// truncated at the borders.
pub fn spatial_median(depth: &DepthFrame, window: usize) -> Result<DepthFrame> {
    check_window(window)?;
    let (w, h) = depth.dims();
    let r = window / 2;
    let mut out = DepthFrame::invalid(w, h);
    let mut buf = Vec::with_capacity(window * window);
    for y in 0..h {
        for x in 0..w {
            buf.clear();
            for yy in y.saturating_sub(r)..(y + r + 1).min(h) {
                for xx in x.saturating_sub(r)..(x + r + 1).min(w) {
                    if let Some(d) = depth.at(xx, yy) {
                        buf.push(d);
                    }
                }
            }
            if !buf.is_empty() {
                out.set(y * w + x, Some(lower_median(&mut buf)));
            }
        }
    }
    Ok(out)
}

/// Keeps a pixel of the newest frame only when it and every other frame of
/// the window are valid and within `tol * d_newest` of it. A window shorter
/// than `m` rejects everything.
pub fn temporal_reject(frames: &[&DepthFrame], m: usize, tol: f64) -> Result<DepthFrame> {
    if m < 2 {
        return Err(Error::config("baselines.temporal_window", "must be at least 2"));
    }
    let newest = *frames.last().ok_or_else(|| Error::Empty("temporal window has no frames".into()))?;
    let (w, h) = newest.dims();
    for f in frames {
        crate::error::check_shape((w, h), f.dims())?;
    }
    let mut out = DepthFrame::invalid(w, h);
    if frames.len() < m {
        return Ok(out);
    }
    let window = &frames[frames.len() - m..];
    for i in 0..newest.len() {
        let Some(d) = newest.get(i) else { continue };
        let agree = window.iter().all(|f| f.get(i).is_some_and(|q| (q - d).abs() <= tol * d));
        if agree {
            out.set(i, Some(d));
        }
    }
    Ok(out)
}

/// One baseline pipeline instance; only `TemporalReject` keeps state.
#[derive(Debug, Clone)]
pub struct Baseline {
    pub kind: BaselineKind,
    pub params: BaselineParams,
    history: VecDeque<DepthFrame>,
}

impl Baseline {
    pub fn new(kind: BaselineKind, params: BaselineParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            kind,
            params,
            history: VecDeque::new(),
        })
    }

    /// Preprocessed depth and its fusion weights.
    pub fn process(&mut self, depth: &DepthFrame) -> Result<(DepthFrame, ReliabilityMap)> {
        let out = match self.kind {
            BaselineKind::Naive => depth.clone(),
            BaselineKind::ValidityRange => validity_range_gate(depth, self.params.trusted_range)?,
            BaselineKind::SpatialMedian => spatial_median(depth, self.params.median_window)?,
            BaselineKind::TemporalReject => {
                let m = self.params.temporal_window;
                self.history.push_back(depth.clone());
                while self.history.len() > m {
                    self.history.pop_front();
                }
                let window: Vec<&DepthFrame> = self.history.iter().collect();
                temporal_reject(&window, m, self.params.agreement_tol)?
            }
        };
        let w = naive_weights(&out);
        Ok((out, w))
    }
}
