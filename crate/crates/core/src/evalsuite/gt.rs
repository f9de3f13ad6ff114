use crate::error::{Error, Result};
use crate::gridfusion::{inflate, CellState, Costmap, GridSpec};
use crate::scenegen::{Rect, Segment, World};

/// Geometry-derived reference map. Cells outside the world bounds belong to
/// neither set.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthCostmap {
    pub spec: GridSpec,
    occupied: Vec<bool>,
    free: Vec<bool>,
    /// Footprint cells before inflation.
    footprint: Vec<bool>,
}

impl GroundTruthCostmap {
    /// A reference map from explicit sets; the footprint is `occupied`.
    /// A cell may not be in both sets.
    pub fn from_masks(spec: GridSpec, occupied: Vec<bool>, free: Vec<bool>) -> Result<Self> {
        spec.validate()?;
        for m in [&occupied, &free] {
            if m.len() != spec.cells() {
                return Err(Error::ShapeMismatch {
                    expected: (spec.nx(), spec.ny()),
                    found: (m.len(), 1),
                });
            }
        }
        if occupied.iter().zip(&free).any(|(&o, &f)| o && f) {
            return Err(Error::Domain("a cell is both occupied and free".into()));
        }
        Ok(Self {
            spec,
            footprint: occupied.clone(),
            occupied,
            free,
        })
    }

    pub fn occupied(&self) -> &[bool] {
        &self.occupied
    }

    pub fn free(&self) -> &[bool] {
        &self.free
    }

    pub fn footprint(&self) -> &[bool] {
        &self.footprint
    }

    pub fn free_count(&self) -> usize {
        self.free.iter().filter(|&&f| f).count()
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    pub fn check_spec(&self, spec: &GridSpec) -> Result<()> {
        if *spec != self.spec {
            return Err(Error::SpecMismatch(format!("ground truth {:?} vs {:?}", self.spec, spec)));
        }
        Ok(())
    }

    /// The planning view: `O_gt` occupied, `F_gt` free, the rest unknown.
    pub fn as_costmap(&self) -> Costmap {
        let states = self
            .occupied
            .iter()
            .zip(&self.free)
            .map(|(&o, &f)| match (o, f) {
                (true, _) => CellState::Occupied,
                (false, true) => CellState::Free,
                _ => CellState::Unknown,
            })
            .collect();
        Costmap::from_states(self.spec, states).expect("sizes match the spec")
    }
}

fn cell_square(spec: &GridSpec, ix: usize, iy: usize) -> Rect {
    let x0 = spec.origin[0] + ix as f64 * spec.resolution;
    let y0 = spec.origin[1] + iy as f64 * spec.resolution;
    Rect {
        min: [x0, y0],
        max: [x0 + spec.resolution, y0 + spec.resolution],
    }
}

/// Whether a segment overlaps a closed axis-aligned square along a piece of
/// positive length (Liang-Barsky), so a segment ending on a grid line does
/// not claim the cell beyond it.
#[allow(clippy::needless_range_loop)]
pub(crate) fn segment_hits_square(s: &Segment, sq: &Rect) -> bool {
    let d = [s.b[0] - s.a[0], s.b[1] - s.a[1]];
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for a in 0..2 {
        if d[a] == 0.0 {
            if s.a[a] < sq.min[a] || s.a[a] > sq.max[a] {
                return false;
            }
            continue;
        }
        let mut lo = (sq.min[a] - s.a[a]) / d[a];
        let mut hi = (sq.max[a] - s.a[a]) / d[a];
        if lo > hi {
            std::mem::swap(&mut lo, &mut hi);
        }
        t0 = t0.max(lo);
        t1 = t1.min(hi);
        if t0 > t1 {
            return false;
        }
    }
    (t1 - t0) * s.length() > 1e-9
}

/// Positive-area overlap, so a footprint edge on a grid line does not
/// claim the neighbouring row.
fn rect_overlaps_square(r: &Rect, sq: &Rect) -> bool {
    sq.min[0] < r.max[0] && sq.max[0] > r.min[0] && sq.min[1] < r.max[1] && sq.max[1] > r.min[1]
}

/// Rasterizes walls and in-band boxes, inflates by `radius`, and assigns
/// every other cell whose centre lies inside the world bounds to `F_gt`.
pub fn gt_costmap(world: &World, spec: &GridSpec, radius: f64) -> Result<GroundTruthCostmap> {
    spec.validate()?;
    let (nx, ny) = (spec.nx(), spec.ny());
    let mut footprint = vec![false; nx * ny];
    let band = spec.height_band;
    let boxes: Vec<&Rect> = world
        .boxes
        .iter()
        .filter(|b| b.z_max >= band[0] && b.z_min <= band[1])
        .map(|b| &b.footprint)
        .collect();
    let walls_in_band = world.wall_height >= band[0];
    for iy in 0..ny {
        for ix in 0..nx {
            let sq = cell_square(spec, ix, iy);
            let hit = (walls_in_band && world.walls.iter().any(|w| segment_hits_square(w, &sq)))
                || boxes.iter().any(|r| rect_overlaps_square(r, &sq));
            footprint[spec.index(ix, iy)] = hit;
        }
    }
    let states = footprint
        .iter()
        .map(|&f| if f { CellState::Occupied } else { CellState::Free })
        .collect();
    let inflated = inflate(&Costmap::from_states(*spec, states)?, radius)?;
    let occupied: Vec<bool> = inflated.states().iter().map(|&s| s == CellState::Occupied).collect();
    let mut free = vec![false; nx * ny];
    for iy in 0..ny {
        for ix in 0..nx {
            let i = spec.index(ix, iy);
            let [cx, cy] = spec.center(ix, iy);
            free[i] = !occupied[i] && world.bounds.contains(cx, cy, 0.0);
        }
    }
    Ok(GroundTruthCostmap {
        spec: *spec,
        occupied,
        free,
        footprint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_square_cases() {
        let sq = Rect { min: [0.0, 0.0], max: [1.0, 1.0] };
        let s = |a: [f64; 2], b: [f64; 2]| Segment { a, b };
        assert!(segment_hits_square(&s([-1.0, 0.5], [2.0, 0.5]), &sq));
        assert!(segment_hits_square(&s([0.2, 0.2], [0.3, 0.3]), &sq));
        assert!(!segment_hits_square(&s([1.5, -1.0], [1.5, 2.0]), &sq));
        assert!(!segment_hits_square(&s([-1.0, 1.5], [1.5, 3.0]), &sq));
        assert!(!segment_hits_square(&s([-1.0, 1.0], [0.0, 1.0]), &sq));
        assert!(segment_hits_square(&s([0.0, -1.0], [0.0, 2.0]), &sq));
    }
}
