//! Per-pixel image containers shared by every stage of the pipeline.

use serde::{Deserialize, Serialize};

use crate::error::{check_shape, Error, Result};

/// Nearest valid depth the sensor reports, in meters.
pub const RANGE_MIN: f64 = 0.17;
/// Farthest valid depth the sensor reports, in meters.
pub const RANGE_MAX: f64 = 10.0;
/// Value stored in `DepthFrame::values` for invalid pixels.
pub const INVALID_DEPTH: f64 = 0.0;

#[inline]
pub fn in_range(d: f64) -> bool {
    d.is_finite() && (RANGE_MIN..=RANGE_MAX).contains(&d)
}

/// Metric depth image with an explicit validity mask.
///
/// Every valid value lies in `[RANGE_MIN, RANGE_MAX]`; invalid pixels carry
/// `INVALID_DEPTH`.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthFrame {
    width: usize,
    height: usize,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl DepthFrame {
    /// A frame with every pixel invalid.
    pub fn invalid(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![INVALID_DEPTH; width * height],
            valid: vec![false; width * height],
        }
    }

    /// Builds a frame from raw depths; non-finite or out-of-range samples
    /// become invalid.
    pub fn from_depths(width: usize, height: usize, depths: &[f64]) -> Result<Self> {
        check_shape((width * height, 1), (depths.len(), 1))?;
        let mut frame = Self::invalid(width, height);
        for (i, &d) in depths.iter().enumerate() {
            frame.set(i, Some(d));
        }
        Ok(frame)
    }

    /// Builds a frame from millimeter samples where 0 means invalid.
    pub fn from_millimeters(width: usize, height: usize, mm: &[u16]) -> Result<Self> {
        check_shape((width * height, 1), (mm.len(), 1))?;
        let mut frame = Self::invalid(width, height);
        for (i, &v) in mm.iter().enumerate() {
            if v != 0 {
                frame.set(i, Some(v as f64 / 1000.0));
            }
        }
        Ok(frame)
    }

    pub fn to_millimeters(&self) -> Vec<u16> {
        self.values
            .iter()
            .zip(&self.valid)
            .map(|(&d, &ok)| if ok { millimeters(d) } else { 0 })
            .collect()
    }

    /// Rounds every valid sample to whole millimeters, matching what the
    /// dataset files store.
    pub fn quantize_mm(&mut self) {
        for i in 0..self.values.len() {
            if self.valid[i] {
                let d = millimeters(self.values[i]) as f64 / 1000.0;
                self.set(i, Some(d));
            }
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn is_valid(&self, i: usize) -> bool {
        self.valid[i]
    }

    #[inline]
    pub fn get(&self, i: usize) -> Option<f64> {
        self.valid[i].then_some(self.values[i])
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> Option<f64> {
        self.get(y * self.width + x)
    }

    /// Raw values, `INVALID_DEPTH` where invalid.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn validity(&self) -> &[bool] {
        &self.valid
    }

    /// Stores `d`, invalidating the pixel when `d` is `None` or out of range.
    #[inline]
    pub fn set(&mut self, i: usize, d: Option<f64>) {
        match d {
            Some(d) if in_range(d) => {
                self.values[i] = d;
                self.valid[i] = true;
            }
            _ => {
                self.values[i] = INVALID_DEPTH;
                self.valid[i] = false;
            }
        }
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }
}

fn millimeters(d: f64) -> u16 {
    (d * 1000.0).round().clamp(1.0, 65535.0) as u16
}

/// RGB image with channels in `[0, 1]`, stored interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbFrame {
    width: usize,
    height: usize,
    data: Vec<[f64; 3]>,
}

impl RgbFrame {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![[0.0; 3]; width * height],
        }
    }

    pub fn from_bytes(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        check_shape((width * height * 3, 1), (bytes.len(), 1))?;
        let data = bytes
            .chunks_exact(3)
            .map(|c| {
                [
                    c[0] as f64 / 255.0,
                    c[1] as f64 / 255.0,
                    c[2] as f64 / 255.0,
                ]
            })
            .collect();
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.data
            .iter()
            .flat_map(|px| px.map(|c| (c.clamp(0.0, 1.0) * 255.0).round() as u8))
            .collect()
    }

    /// Rounds channels to 8-bit levels.
    pub fn quantize(&mut self) {
        for px in &mut self.data {
            for c in px.iter_mut() {
                *c = (c.clamp(0.0, 1.0) * 255.0).round() / 255.0;
            }
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, i: usize) -> [f64; 3] {
        self.data[i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, rgb: [f64; 3]) {
        self.data[i] = rgb.map(|c| c.clamp(0.0, 1.0));
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.data
    }
}

/// Per-pixel trust score in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ReliabilityMap {
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            values: vec![value.clamp(0.0, 1.0); width * height],
        }
    }

    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        check_shape((width * height, 1), (values.len(), 1))?;
        if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!("reliability {bad} outside [0, 1]")));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.values
            .iter()
            .map(|v| (v * 255.0).round() as u8)
            .collect()
    }
}

/// Glare severity category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Severity {
    L0,
    L1,
    L2,
}

impl Severity {
    pub const ALL: [Severity; 3] = [Severity::L0, Severity::L1, Severity::L2];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Gray level used in severity mask images.
    pub fn gray(self) -> u8 {
        match self {
            Severity::L0 => 0,
            Severity::L1 => 128,
            Severity::L2 => 255,
        }
    }

    pub fn from_gray(g: u8) -> Option<Self> {
        match g {
            0 => Some(Severity::L0),
            128 => Some(Severity::L1),
            255 => Some(Severity::L2),
            _ => None,
        }
    }
}

impl std::fmt::Display for Severity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "L{}", self.index())
    }
}

impl std::str::FromStr for Severity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "L0" | "l0" => Ok(Severity::L0),
            "L1" | "l1" => Ok(Severity::L1),
            "L2" | "l2" => Ok(Severity::L2),
            other => Err(Error::config("severity", format!("unknown level `{other}`"))),
        }
    }
}

/// Per-pixel glare severity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeverityMask {
    width: usize,
    height: usize,
    levels: Vec<Severity>,
}

impl SeverityMask {
    pub fn uniform(width: usize, height: usize, level: Severity) -> Self {
        Self {
            width,
            height,
            levels: vec![level; width * height],
        }
    }

    pub fn from_levels(width: usize, height: usize, levels: Vec<Severity>) -> Result<Self> {
        check_shape((width * height, 1), (levels.len(), 1))?;
        Ok(Self {
            width,
            height,
            levels,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, i: usize) -> Severity {
        self.levels[i]
    }

    pub fn levels(&self) -> &[Severity] {
        &self.levels
    }

    /// Pixel counts per level, indexed by `Severity::index`.
    pub fn histogram(&self) -> [usize; 3] {
        let mut h = [0; 3];
        for l in &self.levels {
            h[l.index()] += 1;
        }
        h
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.levels.iter().map(|l| l.gray()).collect()
    }
}
