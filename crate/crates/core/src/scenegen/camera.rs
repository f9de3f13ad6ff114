use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pinhole intrinsics. Pixel `(u, v)` is addressed by its integer
/// coordinates; the principal ray passes through `(cx, cy)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub width: usize,
    pub height: usize,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self {
            width: 128,
            height: 96,
            fx: 80.0,
            fy: 80.0,
            cx: 64.0,
            cy: 48.0,
        }
    }
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::config("camera", "width and height must be nonzero"));
        }
        if !(self.fx > 0.0 && self.fy > 0.0 && self.fx.is_finite() && self.fy.is_finite()) {
            return Err(Error::config("camera.fx", "focal lengths must be positive"));
        }
        if !(0.0..self.width as f64).contains(&self.cx) {
            return Err(Error::config("camera.cx", "principal point outside the image"));
        }
        if !(0.0..self.height as f64).contains(&self.cy) {
            return Err(Error::config("camera.cy", "principal point outside the image"));
        }
        Ok(())
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    /// Camera-frame point for pixel `(u, v)` at depth `d` (x right, y down,
    /// z forward).
    #[inline]
    pub fn unproject(&self, u: f64, v: f64, d: f64) -> [f64; 3] {
        [(u - self.cx) * d / self.fx, (v - self.cy) * d / self.fy, d]
    }
}

/// Planar robot pose carrying a forward-looking camera `z` meters above the
/// floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub z: f64,
}

/// Maps any angle to `(-pi, pi]`.
pub fn normalize_yaw(yaw: f64) -> f64 {
    let mut a = yaw.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

impl Pose {
    pub fn new(x: f64, y: f64, yaw: f64, z: f64) -> Self {
        Self {
            x,
            y,
            yaw: normalize_yaw(yaw),
            z,
        }
    }

    /// Camera-frame to world-frame transform. The optical axis looks along
    /// `yaw` in the ground plane, image x points to the robot's right and
    /// image y points down.
    #[inline]
    pub fn camera_to_world(&self, p: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.yaw.sin_cos();
        let [xc, yc, zc] = p;
        [
            self.x + c * zc + s * xc,
            self.y + s * zc - c * xc,
            self.z - yc,
        ]
    }

    /// World direction of the ray through camera-frame direction `d`.
    #[inline]
    pub fn rotate(&self, d: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.yaw.sin_cos();
        [c * d[2] + s * d[0], s * d[2] - c * d[0], -d[1]]
    }
}
