use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gridfusion::{CellState, Costmap, GridSpec};

use super::gt::GroundTruthCostmap;

/// PLR above which a successful trial counts as a detour.
pub const DETOUR_PLR: f64 = 1.10;

/// Path cost kept as exact step counts so that equal-cost paths compare
/// equal regardless of summation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StepCount {
    pub straight: u32,
    pub diagonal: u32,
}

impl StepCount {
    /// Length in cells.
    pub fn cells(self) -> f64 {
        self.straight as f64 + self.diagonal as f64 * std::f64::consts::SQRT_2
    }

    fn add(self, diagonal: bool) -> Self {
        if diagonal {
            Self { diagonal: self.diagonal + 1, ..self }
        } else {
            Self { straight: self.straight + 1, ..self }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    /// Cell indices from start to goal inclusive.
    pub cells: Vec<usize>,
    pub steps: StepCount,
    /// Metric length.
    pub length: f64,
}

const MOVES: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

/// 8-connected neighbours of the passable grid; a diagonal needs both
/// orthogonal cells passable.
fn neighbours(passable: &[bool], nx: usize, ny: usize, i: usize, out: &mut Vec<(usize, bool)>) {
    out.clear();
    let (x, y) = ((i % nx) as i64, (i / nx) as i64);
    let ok = |x: i64, y: i64| x >= 0 && y >= 0 && x < nx as i64 && y < ny as i64 && passable[(y * nx as i64 + x) as usize];
    for (dx, dy) in MOVES {
        let (x2, y2) = (x + dx, y + dy);
        if !ok(x2, y2) {
            continue;
        }
        let diag = dx != 0 && dy != 0;
        if diag && !(ok(x + dx, y) && ok(x, y + dy)) {
            continue;
        }
        out.push(((y2 * nx as i64 + x2) as usize, diag));
    }
}

#[derive(PartialEq)]
struct Node {
    f: f64,
    h: f64,
    cell: usize,
}

impl Eq for Node {}

impl Ord for Node {
    // min-heap on (f, h, cell)
    fn cmp(&self, o: &Self) -> Ordering {
        o.f.total_cmp(&self.f)
            .then_with(|| o.h.total_cmp(&self.h))
            .then_with(|| o.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

fn search(passable: &[bool], spec: &GridSpec, start: usize, goal: usize, heuristic: bool) -> Option<Path> {
    let (nx, ny) = (spec.nx(), spec.ny());
    if !passable[start] || !passable[goal] {
        return None;
    }
    let (gx, gy) = ((goal % nx) as f64, (goal / nx) as f64);
    let h = |i: usize| {
        if heuristic {
            ((i % nx) as f64 - gx).hypot((i / nx) as f64 - gy)
        } else {
            0.0
        }
    };
    let n = nx * ny;
    let mut g: Vec<Option<StepCount>> = vec![None; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut heap = BinaryHeap::new();
    g[start] = Some(StepCount::default());
    heap.push(Node { f: h(start), h: h(start), cell: start });
    let mut nb = Vec::with_capacity(8);
    while let Some(Node { cell, .. }) = heap.pop() {
        if closed[cell] {
            continue;
        }
        closed[cell] = true;
        if cell == goal {
            break;
        }
        let gc = g[cell].expect("queued cells have a cost");
        neighbours(passable, nx, ny, cell, &mut nb);
        for &(next, diag) in &nb {
            if closed[next] {
                continue;
            }
            let cand = gc.add(diag);
            if g[next].is_none_or(|old| cand.cells() < old.cells()) {
                g[next] = Some(cand);
                parent[next] = cell;
                let hn = h(next);
                heap.push(Node { f: cand.cells() + hn, h: hn, cell: next });
            }
        }
    }
    let steps = g[goal]?;
    let mut cells = vec![goal];
    let mut c = goal;
    while c != start {
        c = parent[c];
        cells.push(c);
    }
    cells.reverse();
    Some(Path {
        cells,
        steps,
        length: steps.cells() * spec.resolution,
    })
}

/// A* with the Euclidean heuristic over `passable` cells.
pub fn astar(passable: &[bool], spec: &GridSpec, start: usize, goal: usize) -> Option<Path> {
    search(passable, spec, start, goal, true)
}

/// Uniform-cost search with the same move set, as an admissibility oracle.
pub fn dijkstra(passable: &[bool], spec: &GridSpec, start: usize, goal: usize) -> Option<Path> {
    search(passable, spec, start, goal, false)
}

/// Plans over the free cells of a costmap between two world points;
/// unknown cells are blocked.
pub fn plan_path(costmap: &Costmap, start: [f64; 2], goal: [f64; 2]) -> Option<Path> {
    let spec = costmap.spec;
    let s = spec.cell_of(start[0], start[1])?;
    let g = spec.cell_of(goal[0], goal[1])?;
    let passable: Vec<bool> = costmap.states().iter().map(|&c| c == CellState::Free).collect();
    astar(&passable, &spec, spec.index(s.0, s.1), spec.index(g.0, g.1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    /// The predicted map has no route, including a blocked start or goal.
    Blocked,
    /// The planned route crosses ground-truth occupied space.
    Collision,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum TrialOutcome {
    /// No ground-truth route exists; left out of every aggregate.
    Excluded,
    Failure { reason: FailureReason },
    Success { plr: f64, detour: bool, length: f64 },
}

impl TrialOutcome {
    pub fn is_success(&self) -> bool {
        matches!(self, TrialOutcome::Success { .. })
    }
}

pub fn trial_outcome(predicted: &Costmap, gt: &GroundTruthCostmap, start: [f64; 2], goal: [f64; 2]) -> Result<TrialOutcome> {
    gt.check_spec(&predicted.spec)?;
    let Some(reference) = plan_path(&gt.as_costmap(), start, goal) else {
        return Ok(TrialOutcome::Excluded);
    };
    let Some(path) = plan_path(predicted, start, goal) else {
        return Ok(TrialOutcome::Failure { reason: FailureReason::Blocked });
    };
    if path.cells.iter().any(|&c| gt.occupied()[c]) {
        return Ok(TrialOutcome::Failure { reason: FailureReason::Collision });
    }
    let plr = if reference.length > 0.0 { path.length / reference.length } else { 1.0 };
    Ok(TrialOutcome::Success {
        plr,
        detour: plr > DETOUR_PLR,
        length: path.length,
    })
}
