use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pnm;

use super::{GridSpec, OccupancyGrid};

pub const T_ON: f64 = 0.7;
pub const T_OFF: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellState {
    Occupied,
    Free,
    Unknown,
}

impl CellState {
    pub fn gray(self) -> u8 {
        match self {
            CellState::Occupied => 0,
            CellState::Free => 254,
            CellState::Unknown => 205,
        }
    }
}

/// Ternary costmap. `lethal` marks the cells occupied before inflation;
/// inflation radiates from those only, so it is idempotent.
#[derive(Debug, Clone, PartialEq)]
pub struct Costmap {
    pub spec: GridSpec,
    states: Vec<CellState>,
    lethal: Vec<bool>,
}

fn same_spec(a: &GridSpec, b: &GridSpec) -> Result<()> {
    if a != b {
        return Err(Error::SpecMismatch(format!("{a:?} vs {b:?}")));
    }
    Ok(())
}

impl Costmap {
    pub fn uniform(spec: GridSpec, state: CellState) -> Self {
        let n = spec.cells();
        Self {
            spec,
            states: vec![state; n],
            lethal: vec![state == CellState::Occupied; n],
        }
    }

    /// Builds a costmap whose occupied cells are all lethal.
    pub fn from_states(spec: GridSpec, states: Vec<CellState>) -> Result<Self> {
        if states.len() != spec.cells() {
            return Err(Error::ShapeMismatch {
                expected: (spec.nx(), spec.ny()),
                found: (states.len(), 1),
            });
        }
        let lethal = states.iter().map(|&s| s == CellState::Occupied).collect();
        Ok(Self { spec, states, lethal })
    }

    pub fn states(&self) -> &[CellState] {
        &self.states
    }

    pub fn get(&self, ix: usize, iy: usize) -> CellState {
        self.states[self.spec.index(ix, iy)]
    }

    pub fn is_lethal(&self, i: usize) -> bool {
        self.lethal[i]
    }

    pub fn count(&self, state: CellState) -> usize {
        self.states.iter().filter(|&&s| s == state).count()
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let data: Vec<u8> = self.states.iter().map(|s| s.gray()).collect();
        pnm::encode_pgm8(self.spec.nx(), self.spec.ny(), &data)
    }

    /// Writes `<stem>.pgm` and `<stem>.json`; image row `r` is grid row
    /// `iy = r`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        let pgm = dir.join(format!("{stem}.pgm"));
        fs::write(&pgm, self.to_pgm()).map_err(|e| Error::io(&pgm, e))?;
        write_sidecar(dir, stem, &self.spec)
    }

    /// Reads back what `write` produced. Lethal cells are the occupied ones,
    /// which loses nothing for metrics and planning.
    pub fn read(dir: &Path, stem: &str) -> Result<Self> {
        let json = dir.join(format!("{stem}.json"));
        let text = fs::read_to_string(&json).map_err(|e| Error::io(&json, e))?;
        let side: SidecarIn = serde_json::from_str(&text).map_err(|e| Error::json(&json, e))?;
        side.spec.validate()?;
        let pgm = dir.join(format!("{stem}.pgm"));
        let data = match pnm::read_pnm(&pgm)? {
            pnm::PnmImage::Gray8 { width, height, data } if (width, height) == (side.spec.nx(), side.spec.ny()) => data,
            img => {
                return Err(Error::SpecMismatch(format!(
                    "{} is {:?}, sidecar grid is {}x{}",
                    pgm.display(),
                    img.dimensions(),
                    side.spec.nx(),
                    side.spec.ny()
                )))
            }
        };
        let states = data
            .iter()
            .map(|&g| match g {
                0 => Ok(CellState::Occupied),
                254 => Ok(CellState::Free),
                205 => Ok(CellState::Unknown),
                other => Err(Error::Format {
                    path: pgm.clone(),
                    message: format!("gray level {other} is not a cell state"),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_states(side.spec, states)
    }
}

#[derive(Deserialize)]
struct SidecarIn {
    spec: GridSpec,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    spec: &'a GridSpec,
    width: usize,
    height: usize,
    row_order: &'static str,
}

fn write_sidecar(dir: &Path, stem: &str, spec: &GridSpec) -> Result<()> {
    let path = dir.join(format!("{stem}.json"));
    let side = Sidecar {
        spec,
        width: spec.nx(),
        height: spec.ny(),
        row_order: "iy_ascending",
    };
    let mut text = serde_json::to_string_pretty(&side).map_err(|e| Error::json(&path, e))?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

impl OccupancyGrid {
    /// Row-major CSV of `p`, one grid row per line, shortest exact decimals.
    pub fn to_csv(&self) -> String {
        let nx = self.spec.nx();
        let mut out = String::with_capacity(self.p().len() * 8);
        for row in self.p().chunks(nx) {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write!(out, "{v}").expect("writing to a String");
            }
            out.push('\n');
        }
        out
    }

    /// Writes `<stem>.csv` and `<stem>.json`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        let csv = dir.join(format!("{stem}.csv"));
        fs::write(&csv, self.to_csv()).map_err(|e| Error::io(&csv, e))?;
        write_sidecar(dir, stem, &self.spec)
    }
}

/// Hysteresis thresholding. `prev` should be the previous *binarized*
/// (not inflated) map, so that inflation never feeds back into the hold.
pub fn binarize(grid: &OccupancyGrid, prev: Option<&Costmap>) -> Result<Costmap> {
    if let Some(prev) = prev {
        same_spec(&grid.spec, &prev.spec)?;
    }
    let states = grid
        .p()
        .iter()
        .zip(grid.observed())
        .enumerate()
        .map(|(i, (&p, &seen))| {
            if !seen {
                CellState::Unknown
            } else if p >= T_ON {
                CellState::Occupied
            } else if p <= T_OFF {
                CellState::Free
            } else {
                match prev.map(|m| m.states[i]) {
                    Some(s @ (CellState::Occupied | CellState::Free)) => s,
                    _ => CellState::Free,
                }
            }
        })
        .collect();
    Costmap::from_states(grid.spec, states)
}

/// Cell offsets whose centre distance from the origin cell is within
/// `radius`.
fn disk(radius: f64, resolution: f64) -> Vec<(i64, i64)> {
    let r = (radius / resolution).floor() as i64 + 1;
    let lim = radius * radius + 1e-9;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            let d2 = ((dx * dx + dy * dy) as f64) * resolution * resolution;
            if d2 <= lim {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Marks every cell within `radius` of a lethal cell as occupied.
pub fn inflate(costmap: &Costmap, radius: f64) -> Result<Costmap> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::config("inflation_radius", "must be non-negative"));
    }
    let spec = costmap.spec;
    let (nx, ny) = (spec.nx() as i64, spec.ny() as i64);
    let offsets = disk(radius, spec.resolution);
    let mut states = costmap.states.clone();
    for iy in 0..ny {
        for ix in 0..nx {
            if !costmap.lethal[(iy * nx + ix) as usize] {
                continue;
            }
            for &(dx, dy) in &offsets {
                let (x, y) = (ix + dx, iy + dy);
                if x >= 0 && y >= 0 && x < nx && y < ny {
                    states[(y * nx + x) as usize] = CellState::Occupied;
                }
            }
        }
    }
    Ok(Costmap {
        spec,
        states,
        lethal: costmap.lethal.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GridSpec {
        GridSpec {
            extent: [2.0, 2.0],
            ..Default::default()
        }
    }

    #[test]
    fn thresholds_and_hold() {
        let spec = small();
        let mut g = OccupancyGrid::new(spec).unwrap();
        g.set(0, 0.8, true);
        g.set(1, 0.6, true);
        g.set(2, 0.4, true);
        g.set(3, 0.6, true);
        let mut prev = Costmap::uniform(spec, CellState::Unknown);
        prev.states[1] = CellState::Occupied;
        let m = binarize(&g, Some(&prev)).unwrap();
        assert_eq!(&m.states()[..5], &[CellState::Occupied, CellState::Occupied, CellState::Free, CellState::Free, CellState::Unknown]);
    }

    #[test]
    fn zero_radius_is_identity() {
        let spec = small();
        let mut states = vec![CellState::Free; spec.cells()];
        states[spec.index(10, 10)] = CellState::Occupied;
        let m = Costmap::from_states(spec, states).unwrap();
        assert_eq!(inflate(&m, 0.0).unwrap(), m);
    }

    #[test]
    fn spec_mismatch_is_rejected() {
        let g = OccupancyGrid::new(small()).unwrap();
        let other = Costmap::uniform(GridSpec::default(), CellState::Free);
        assert!(matches!(binarize(&g, Some(&other)), Err(Error::SpecMismatch(_))));
    }

    #[test]
    fn pgm_colours() {
        let m = Costmap::from_states(
            GridSpec {
                extent: [0.15, 0.05],
                ..Default::default()
            },
            vec![CellState::Occupied, CellState::Free, CellState::Unknown],
        )
        .unwrap();
        let bytes = m.to_pgm();
        assert_eq!(&bytes[bytes.len() - 3..], &[0, 254, 205]);
    }
}
