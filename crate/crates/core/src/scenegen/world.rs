use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Severity;

/// Geometric slack used by containment tests.
pub(crate) const GEOM_EPS: f64 = 1e-6;

/// Axis-aligned rectangle in the ground plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub fn contains(&self, x: f64, y: f64, tol: f64) -> bool {
        x >= self.min[0] - tol && x <= self.max[0] + tol && y >= self.min[1] - tol && y <= self.max[1] + tol
    }

    /// True when the rectangles share area, not just an edge.
    pub fn overlaps_interior(&self, other: &Rect) -> bool {
        self.min[0] < other.max[0] - GEOM_EPS
            && other.min[0] < self.max[0] - GEOM_EPS
            && self.min[1] < other.max[1] - GEOM_EPS
            && other.min[1] < self.max[1] - GEOM_EPS
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    fn check(&self, key: &str) -> Result<()> {
        let finite = self.min.iter().chain(&self.max).all(|v| v.is_finite());
        if !finite || self.min[0] >= self.max[0] || self.min[1] >= self.max[1] {
            return Err(Error::config(key, "rectangle needs finite min < max on both axes"));
        }
        Ok(())
    }
}

/// Vertical wall between two ground points, extruded from the floor to the
/// world's wall height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: [f64; 2],
    pub b: [f64; 2],
}

impl Segment {
    pub fn length(&self) -> f64 {
        (self.b[0] - self.a[0]).hypot(self.b[1] - self.a[1])
    }
}

/// Axis-aligned box standing over `footprint` between `z_min` and `z_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxObstacle {
    #[serde(flatten)]
    pub footprint: Rect,
    #[serde(default)]
    pub z_min: f64,
    pub z_max: f64,
}

impl BoxObstacle {
    /// The four vertical faces, counter-clockwise from the min corner.
    pub fn faces(&self) -> [Segment; 4] {
        let [x0, y0] = self.footprint.min;
        let [x1, y1] = self.footprint.max;
        [
            Segment { a: [x0, y0], b: [x1, y0] },
            Segment { a: [x1, y0], b: [x1, y1] },
            Segment { a: [x1, y1], b: [x0, y1] },
            Segment { a: [x0, y1], b: [x0, y0] },
        ]
    }
}

/// Ground-plane region whose surfaces (floor and any wall or face standing in
/// it) reflect glare at `severity`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlarePatch {
    #[serde(flatten)]
    pub region: Rect,
    pub severity: Severity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub bounds: Rect,
    pub wall_height: f64,
    pub walls: Vec<Segment>,
    pub boxes: Vec<BoxObstacle>,
    pub glare_patches: Vec<GlarePatch>,
}

impl World {
    /// Glare level of a surface point at ground position `(x, y)`; the
    /// strongest covering patch wins.
    pub fn severity_at(&self, x: f64, y: f64) -> Severity {
        self.glare_patches
            .iter()
            .filter(|p| p.region.contains(x, y, GEOM_EPS))
            .map(|p| p.severity)
            .max()
            .unwrap_or(Severity::L0)
    }

    /// Copy of the world with every glare patch set to `level`.
    pub fn with_patch_severity(&self, level: Severity) -> World {
        let mut w = self.clone();
        for p in &mut w.glare_patches {
            p.severity = level;
        }
        w
    }

    /// Checks the structural invariants; `build_world` calls this.
    pub fn validate(&self) -> Result<()> {
        self.bounds.check("bounds")?;
        if !(self.wall_height.is_finite() && self.wall_height > 0.0) {
            return Err(Error::config("wall_height", "must be positive"));
        }
        let inside = |p: [f64; 2]| self.bounds.contains(p[0], p[1], GEOM_EPS);
        for (i, w) in self.walls.iter().enumerate() {
            if !(inside(w.a) && inside(w.b)) {
                return Err(Error::config(format!("walls[{i}]"), "endpoint outside bounds"));
            }
            if w.length() < GEOM_EPS {
                return Err(Error::config(format!("walls[{i}]"), "zero-length wall"));
            }
        }
        for (i, b) in self.boxes.iter().enumerate() {
            let key = format!("boxes[{i}]");
            b.footprint.check(&key)?;
            if !(inside(b.footprint.min) && inside(b.footprint.max)) {
                return Err(Error::config(key, "footprint outside bounds"));
            }
            if !(b.z_min >= 0.0 && b.z_max > b.z_min) {
                return Err(Error::config(key, "needs 0 <= z_min < z_max"));
            }
        }
        for (i, p) in self.glare_patches.iter().enumerate() {
            let key = format!("glare_patches[{i}]");
            p.region.check(&key)?;
            if !(inside(p.region.min) && inside(p.region.max)) {
                return Err(Error::config(key, "region outside bounds"));
            }
            if let Some(j) = self.boxes.iter().position(|b| b.footprint.overlaps_interior(&p.region)) {
                return Err(Error::config(key, format!("overlaps the footprint of boxes[{j}]")));
            }
        }
        Ok(())
    }
}

/// The four walls of an axis-aligned room, counter-clockwise.
pub fn room_walls(room: &Rect) -> Vec<Segment> {
    let [x0, y0] = room.min;
    let [x1, y1] = room.max;
    vec![
        Segment { a: [x0, y0], b: [x1, y0] },
        Segment { a: [x1, y0], b: [x1, y1] },
        Segment { a: [x1, y1], b: [x0, y1] },
        Segment { a: [x0, y1], b: [x0, y0] },
    ]
}
