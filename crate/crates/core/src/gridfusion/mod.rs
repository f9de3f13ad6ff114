//! Reliability-weighted occupancy fusion into a 2-D grid, hysteresis
//! binarization and inflation.

mod costmap;

use serde::{Deserialize, Serialize};

use crate::error::{check_shape, Error, Result};
use crate::frame::{DepthFrame, ReliabilityMap};
use crate::scenegen::{CameraIntrinsics, Pose};

pub use costmap::{binarize, inflate, CellState, Costmap, T_OFF, T_ON};

/// Metric layout of the grid. Cell `(ix, iy)` covers
/// `[origin + i * resolution, origin + (i + 1) * resolution)` on each axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub resolution: f64,
    /// `[x, y]` side lengths in meters.
    pub extent: [f64; 2],
    /// World coordinates of the min corner of cell `(0, 0)`.
    pub origin: [f64; 2],
    /// `[z_min, z_max]` of points that count as obstacles.
    pub height_band: [f64; 2],
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            resolution: 0.05,
            extent: [12.0, 12.0],
            origin: [0.0, 0.0],
            height_band: [0.1, 2.0],
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(Error::config("grid.resolution", "must be positive"));
        }
        for (axis, e) in self.extent.iter().enumerate() {
            let n = e / self.resolution;
            if !(n >= 1.0 && (n - n.round()).abs() < 1e-9) {
                return Err(Error::config(
                    format!("grid.extent[{axis}]"),
                    "must be a positive integer multiple of the resolution",
                ));
            }
        }
        if !(self.height_band[0] < self.height_band[1]) {
            return Err(Error::config("grid.height_band", "needs z_min < z_max"));
        }
        Ok(())
    }

    pub fn nx(&self) -> usize {
        (self.extent[0] / self.resolution).round() as usize
    }

    pub fn ny(&self) -> usize {
        (self.extent[1] / self.resolution).round() as usize
    }

    pub fn cells(&self) -> usize {
        self.nx() * self.ny()
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx() + ix
    }

    /// World coordinates of a cell centre.
    pub fn center(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            self.origin[0] + (ix as f64 + 0.5) * self.resolution,
            self.origin[1] + (iy as f64 + 0.5) * self.resolution,
        ]
    }

    /// Cell containing a ground-plane point, or `None` outside the extent.
    #[inline]
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fx = ((x - self.origin[0]) / self.resolution).floor();
        let fy = ((y - self.origin[1]) / self.resolution).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.nx() as f64 || fy >= self.ny() as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    pub fn in_band(&self, z: f64) -> bool {
        z >= self.height_band[0] && z <= self.height_band[1]
    }
}

/// Cell of a 3-D point, rejecting points outside the grid or the height
/// band. Boundary points fall into the higher cell, i.e. each cell is
/// half-open on its upper edge.
pub fn point_to_cell(point: [f64; 3], spec: &GridSpec) -> Option<(usize, usize)> {
    if !spec.in_band(point[2]) {
        return None;
    }
    spec.cell_of(point[0], point[1])
}

/// World point of pixel `(u, v)` at depth `d`.
pub fn backproject(u: usize, v: usize, d: f64, intrinsics: &CameraIntrinsics, pose: &Pose) -> Result<[f64; 3]> {
    if !crate::frame::in_range(d) {
        return Err(Error::Domain(format!("cannot back-project invalid depth {d}")));
    }
    Ok(pose.camera_to_world(intrinsics.unproject(u as f64, v as f64, d)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionMode {
    /// Pixels need `w > tau`, then contribute weighted evidence.
    Weighted,
    /// Every valid pixel contributes weighted evidence.
    WeightedUnthresholded,
    /// As `Weighted`, and a cell accepts occupied evidence only after `k`
    /// consecutive frames that each carried some.
    Gated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionParams {
    pub lambda: f64,
    pub tau: f64,
    pub mode: FusionMode,
    pub k: u32,
    /// Ground-plane range within which points mark and rays clear.
    pub range: f64,
    /// Clearing stops this far short of the endpoint (or of `range`), so
    /// rays grazing a surface do not erase the cells it occupies.
    pub clear_margin: f64,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self {
            lambda: 0.85,
            tau: 0.3,
            mode: FusionMode::Weighted,
            k: 3,
            range: 5.0,
            clear_margin: 0.2,
        }
    }
}

impl FusionParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::config("fusion.lambda", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::config("fusion.tau", "must lie in [0, 1]"));
        }
        if self.k == 0 {
            return Err(Error::config("fusion.k", "must be at least 1"));
        }
        if !(self.range > 0.0) {
            return Err(Error::config("fusion.range", "must be positive"));
        }
        if !(self.clear_margin >= 0.0 && self.clear_margin < self.range) {
            return Err(Error::config("fusion.clear_margin", "must lie in [0, range)"));
        }
        Ok(())
    }

    #[inline]
    fn admits(&self, w: f64) -> bool {
        match self.mode {
            FusionMode::WeightedUnthresholded => true,
            FusionMode::Weighted | FusionMode::Gated => w > self.tau,
        }
    }
}

/// The one-step recurrence `lambda * p + (1 - lambda) * e`.
#[inline]
pub fn occupancy_update(p: f64, lambda: f64, evidence: f64) -> f64 {
    lambda * p + (1.0 - lambda) * evidence
}

/// Continuous occupancy `p` in `[0, 1]` per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub spec: GridSpec,
    p: Vec<f64>,
    observed: Vec<bool>,
    streak: Vec<u32>,
    frames: u64,
    scratch: Scratch,
}

#[derive(Debug, Clone, PartialEq, Default)]
struct Scratch {
    mark_w: Vec<f64>,
    marks: Vec<u32>,
    clears: Vec<u32>,
    touched: Vec<usize>,
}

impl OccupancyGrid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.cells();
        Ok(Self {
            spec,
            p: vec![0.0; n],
            observed: vec![false; n],
            streak: vec![0; n],
            frames: 0,
            scratch: Scratch {
                mark_w: vec![0.0; n],
                marks: vec![0; n],
                clears: vec![0; n],
                touched: Vec::new(),
            },
        })
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// Whether a cell has ever received evidence.
    pub fn observed(&self) -> &[bool] {
        &self.observed
    }

    pub fn frames(&self) -> u64 {
        self.frames
    }

    /// Overwrites one cell, for fixtures and tests.
    pub fn set(&mut self, i: usize, p: f64, observed: bool) {
        self.p[i] = p.clamp(0.0, 1.0);
        self.observed[i] = observed;
    }

    #[inline]
    fn touch(&mut self, i: usize) {
        let s = &mut self.scratch;
        if s.marks[i] == 0 && s.clears[i] == 0 {
            s.touched.push(i);
        }
    }

    #[inline]
    fn add_mark(&mut self, i: usize, w: f64) {
        self.touch(i);
        self.scratch.mark_w[i] += w;
        self.scratch.marks[i] += 1;
    }

    #[inline]
    fn add_clear(&mut self, i: usize) {
        self.touch(i);
        self.scratch.clears[i] += 1;
    }

    /// Applies one set of per-cell contributions, then clears the scratch.
    fn commit(&mut self, params: &FusionParams) {
        let mut touched = std::mem::take(&mut self.scratch.touched);
        // ascending cell order keeps the floating-point result independent
        // of ray order
        touched.sort_unstable();
        let gated = params.mode == FusionMode::Gated;
        if gated {
            for i in 0..self.streak.len() {
                if self.scratch.marks[i] == 0 {
                    self.streak[i] = 0;
                }
            }
        }
        for &i in &touched {
            let s = &mut self.scratch;
            let (mut marks, mut mark_w) = (s.marks[i], s.mark_w[i]);
            if gated && marks > 0 {
                self.streak[i] = self.streak[i].saturating_add(1);
                if self.streak[i] < params.k {
                    marks = 0;
                    mark_w = 0.0;
                }
            }
            let n = marks + s.clears[i];
            if n > 0 {
                let evidence = mark_w / n as f64;
                self.p[i] = occupancy_update(self.p[i], params.lambda, evidence).clamp(0.0, 1.0);
                self.observed[i] = true;
            }
            s.mark_w[i] = 0.0;
            s.marks[i] = 0;
            s.clears[i] = 0;
        }
        touched.clear();
        self.scratch.touched = touched;
        self.frames += 1;
    }

    /// Fuses one depth frame weighted by its reliability map.
    pub fn fuse_frame(
        &mut self,
        depth: &DepthFrame,
        reliability: &ReliabilityMap,
        pose: &Pose,
        intrinsics: &CameraIntrinsics,
        params: &FusionParams,
    ) -> Result<()> {
        params.validate()?;
        check_shape(depth.dims(), reliability.dims())?;
        check_shape((intrinsics.width, intrinsics.height), depth.dims())?;
        let spec = self.spec;
        let Some(start) = spec.cell_of(pose.x, pose.y) else {
            return Err(Error::Domain(format!("pose ({:.3}, {:.3}) outside the grid", pose.x, pose.y)));
        };
        let w = intrinsics.width;
        for i in 0..depth.len() {
            let Some(d) = depth.get(i) else { continue };
            let weight = reliability.get(i);
            if !params.admits(weight) {
                continue;
            }
            let p = pose.camera_to_world(intrinsics.unproject((i % w) as f64, (i / w) as f64, d));
            self.integrate_ray(start, [pose.x, pose.y], p, weight, params);
        }
        self.commit(params);
        Ok(())
    }

    /// Clears the cells from the camera toward `p`, stopping `clear_margin`
    /// short of it or of `range` and never touching the endpoint cell, then
    /// marks the endpoint when it is in range and in band.
    fn integrate_ray(&mut self, start: (usize, usize), o: [f64; 2], p: [f64; 3], weight: f64, params: &FusionParams) {
        let spec = self.spec;
        let (dx, dy) = (p[0] - o[0], p[1] - o[1]);
        let r = dx.hypot(dy);
        let in_range = r <= params.range;
        let end_cell = if in_range { spec.cell_of(p[0], p[1]) } else { None };
        let reach = r.min(params.range) - params.clear_margin;
        if reach > 0.0 {
            let s = reach / r;
            let end = [o[0] + dx * s, o[1] + dy * s];
            traverse(&spec, start, o, end, end_cell, |i| self.add_clear(i));
        }
        if in_range {
            if let Some((ix, iy)) = point_to_cell(p, &spec) {
                self.add_mark(spec.index(ix, iy), weight);
            }
        }
    }
}

/// Visits the cells a segment crosses, from `start` up to but excluding
/// `end_cell`, stopping at the grid edge.
fn traverse(
    spec: &GridSpec,
    start: (usize, usize),
    o: [f64; 2],
    end: [f64; 2],
    end_cell: Option<(usize, usize)>,
    mut visit: impl FnMut(usize),
) {
    let res = spec.resolution;
    let (mut ix, mut iy) = (start.0 as i64, start.1 as i64);
    let (nx, ny) = (spec.nx() as i64, spec.ny() as i64);
    let d = [end[0] - o[0], end[1] - o[1]];
    let step = [d[0].signum() as i64, d[1].signum() as i64];
    let boundary = |i: i64, s: i64, axis: usize| spec.origin[axis] + (i + if s > 0 { 1 } else { 0 }) as f64 * res;
    let mut t_max = [f64::INFINITY; 2];
    let mut t_delta = [f64::INFINITY; 2];
    for a in 0..2 {
        if d[a] != 0.0 {
            let i = if a == 0 { ix } else { iy };
            t_max[a] = (boundary(i, step[a], a) - o[a]) / d[a];
            t_delta[a] = res / d[a].abs();
        }
    }
    let end_cell = end_cell.map(|(x, y)| (x as i64, y as i64));
    // the segment has parameter length 1; the cap guards against
    // accumulated rounding
    let max_steps = (nx + ny + 4) as usize;
    for _ in 0..max_steps {
        if Some((ix, iy)) == end_cell {
            return;
        }
        visit((iy * nx + ix) as usize);
        let a = if t_max[0] < t_max[1] { 0 } else { 1 };
        if t_max[a] > 1.0 {
            return;
        }
        if a == 0 {
            ix += step[0];
        } else {
            iy += step[1];
        }
        t_max[a] += t_delta[a];
        if ix < 0 || iy < 0 || ix >= nx || iy >= ny {
            return;
        }
    }
}
