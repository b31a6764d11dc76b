//! Three-class probabilistic occupancy grids.
//!
//! Every cell holds a distribution over [`CellClass`]. Observations are
//! ground-projected into an egocentric [`LocalGrid`] and registered into a
//! world-aligned [`GlobalMap`] with a per-cell Bayes product. Stored
//! distributions are floored at [`EPSILON`] so no class is ever absorbing.

use serde::{Deserialize, Serialize};

use crate::geom::{chamfer_distance, sin_cos_deg, Cell};
use crate::world::{AgentPose, Floorplan, RangeScan};
use crate::{Error, Result};

/// Probability floor for stored distributions and Bayes likelihoods.
pub const EPSILON: f64 = 0.01;
/// Default local window, cells per side.
pub const LOCAL_SIZE: usize = 160;
pub const UNIFORM: CellDist = [1.0 / 3.0; 3];

/// Absorbs floating-point noise when flooring metric coordinates that are
/// meant to land exactly on a cell boundary.
const FLOOR_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellClass {
    Unknown = 0,
    Occupied = 1,
    Free = 2,
}

impl CellClass {
    pub const ALL: [CellClass; 3] = [CellClass::Unknown, CellClass::Occupied, CellClass::Free];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

/// Per-cell probability vector indexed by [`CellClass::index`].
pub type CellDist = [f64; 3];

pub const OCC: usize = CellClass::Occupied as usize;
pub const FREE: usize = CellClass::Free as usize;
pub const UNK: usize = CellClass::Unknown as usize;

/// An observation of `class`: `1 - EPSILON` on it, the rest split evenly.
pub fn one_hot(class: CellClass) -> CellDist {
    let mut d = [EPSILON / 2.0; 3];
    d[class.index()] = 1.0 - EPSILON;
    d
}

/// True when a cell has never received evidence.
pub fn is_uniform(d: &CellDist) -> bool {
    d[0] == d[1] && d[1] == d[2]
}

pub fn argmax(d: &CellDist) -> CellClass {
    let mut best = 0;
    for i in 1..3 {
        if d[i] > d[best] {
            best = i;
        }
    }
    CellClass::ALL[best]
}

/// Normalizes and lifts every entry to at least [`EPSILON`], rescaling the
/// remaining entries proportionally.
pub fn floor_project(d: CellDist) -> CellDist {
    let sum: f64 = d.iter().sum();
    let mut p = d.map(|v| v / sum);
    let mut floored = [false; 3];
    for _ in 0..3 {
        let mut changed = false;
        for i in 0..3 {
            if !floored[i] && p[i] < EPSILON {
                floored[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let n_floored = floored.iter().filter(|f| **f).count() as f64;
        let free_mass: f64 = (0..3).filter(|&i| !floored[i]).map(|i| p[i]).sum();
        let target = 1.0 - n_floored * EPSILON;
        for i in 0..3 {
            p[i] = if floored[i] { EPSILON } else { p[i] * target / free_mass };
        }
    }
    p
}

/// Posterior ∝ prior · likelihood with the likelihood clamped to
/// `[EPSILON, 1 - EPSILON]`. A uniform likelihood carries no evidence and
/// returns the prior unchanged.
pub fn bayes_update(prior: &CellDist, likelihood: &CellDist) -> CellDist {
    if is_uniform(likelihood) {
        return *prior;
    }
    let l = likelihood.map(|v| v.clamp(EPSILON, 1.0 - EPSILON));
    floor_project([prior[0] * l[0], prior[1] * l[1], prior[2] * l[2]])
}

/// Row-major grid of cell distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbGrid {
    rows: usize,
    cols: usize,
    cells: Vec<CellDist>,
}

impl ProbGrid {
    pub fn uniform(rows: usize, cols: usize) -> Self {
        Self { rows, cols, cells: vec![UNIFORM; rows * cols] }
    }

    pub fn from_cells(rows: usize, cols: usize, cells: Vec<CellDist>) -> Result<Self> {
        if cells.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!("{rows}x{cols} grid given {} cells", cells.len())));
        }
        Ok(Self { rows, cols, cells })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn cells(&self) -> &[CellDist] {
        &self.cells
    }
    pub fn cells_mut(&mut self) -> &mut [CellDist] {
        &mut self.cells
    }

    pub fn get(&self, cell: Cell) -> Option<&CellDist> {
        cell.in_bounds(self.rows, self.cols).then(|| &self.cells[cell.index(self.cols)])
    }

    pub fn set(&mut self, cell: Cell, d: CellDist) {
        let i = cell.index(self.cols);
        self.cells[i] = d;
    }

    /// Occupied probability, or the uniform value out of bounds.
    pub fn occ(&self, cell: Cell) -> f64 {
        self.get(cell).map_or(UNIFORM[OCC], |d| d[OCC])
    }

    pub fn same_shape(&self, other: &ProbGrid) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }
}

/// Egocentric grid: the agent sits in cell `(center_row, center_col)` facing
/// +col; +row is to the agent's right.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalGrid {
    pub probs: ProbGrid,
    pub cell_size: f64,
}

impl LocalGrid {
    pub fn uniform(h: usize, w: usize, cell_size: f64) -> Self {
        Self { probs: ProbGrid::uniform(h, w), cell_size }
    }

    pub fn h(&self) -> usize {
        self.probs.rows
    }
    pub fn w(&self) -> usize {
        self.probs.cols
    }

    /// `(⌊(h-1)/2⌋, ⌊(w-1)/2⌋)`.
    pub fn center(&self) -> (usize, usize) {
        ((self.h() - 1) / 2, (self.w() - 1) / 2)
    }

    /// Cell containing the egocentric point (`x` forward, `z` right), or
    /// `None` when it falls outside the window.
    pub fn cell_of(&self, x: f64, z: f64) -> Option<Cell> {
        let (cz, cx) = self.center();
        let col = (x / self.cell_size + FLOOR_SLACK).floor() as i64 + cx as i64;
        let row = (z / self.cell_size + FLOOR_SLACK).floor() as i64 + cz as i64;
        (row >= 0 && col >= 0 && (row as usize) < self.h() && (col as usize) < self.w()).then(|| Cell::new(row as i32, col as i32))
    }

    pub fn observed_count(&self) -> usize {
        self.probs.cells.iter().filter(|d| !is_uniform(d)).count()
    }
}

/// World-aligned map: cell (0, 0) has its corner at `origin` (x, z).
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalMap {
    pub probs: ProbGrid,
    pub cell_size: f64,
    pub origin: (f64, f64),
}

impl GlobalMap {
    /// Uniform prior everywhere.
    pub fn new(h: usize, w: usize, cell_size: f64, origin: (f64, f64)) -> Self {
        Self { probs: ProbGrid::uniform(h, w), cell_size, origin }
    }

    pub fn h(&self) -> usize {
        self.probs.rows
    }
    pub fn w(&self) -> usize {
        self.probs.cols
    }

    pub fn cell_at(&self, x: f64, z: f64) -> Cell {
        Cell::new(((z - self.origin.1) / self.cell_size + FLOOR_SLACK).floor() as i32, ((x - self.origin.0) / self.cell_size + FLOOR_SLACK).floor() as i32)
    }

    pub fn cell_center(&self, cell: Cell) -> (f64, f64) {
        (self.origin.0 + (f64::from(cell.col) + 0.5) * self.cell_size, self.origin.1 + (f64::from(cell.row) + 0.5) * self.cell_size)
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.in_bounds(self.h(), self.w())
    }

    pub fn same_geometry(&self, other: &GlobalMap) -> bool {
        self.probs.same_shape(&other.probs) && self.cell_size == other.cell_size && self.origin == other.origin
    }

    /// Uniform map covering `fp` with `pad` extra cells on every side.
    pub fn around(fp: &Floorplan, pad: usize) -> Self {
        let r = fp.cell_size();
        let (ox, oz) = fp.origin();
        let p = pad as f64 * r;
        Self::new(fp.rows() + 2 * pad, fp.cols() + 2 * pad, r, (ox - p, oz - p))
    }

    /// One-hot ground truth of `fp` on this map's grid (see [`truth_labels`]);
    /// void cells and cells outside the floorplan stay uniform.
    pub fn truth_of(fp: &Floorplan, pad: usize) -> Self {
        let mut m = Self::around(fp, pad);
        let labels = truth_labels(fp);
        for row in 0..fp.rows() {
            for col in 0..fp.cols() {
                let class = labels[row * fp.cols() + col];
                if class != CellClass::Unknown {
                    m.probs.set(Cell::new((row + pad) as i32, (col + pad) as i32), one_hot(class));
                }
            }
        }
        m
    }
}

/// Blocked cells farther than this from free space are solid void, not wall.
pub const WALL_BAND_CELLS: f64 = 3.0;

/// Ground-truth class per floorplan cell, row-major: free cells are FREE,
/// blocked cells within [`WALL_BAND_CELLS`] of free space are OCCUPIED and
/// the solid mass beyond is UNKNOWN, since no surface exists there to map.
pub fn truth_labels(fp: &Floorplan) -> Vec<CellClass> {
    let cols = fp.cols();
    let cell = |i: usize| Cell::new((i / cols) as i32, (i % cols) as i32);
    let d = chamfer_distance(fp.rows(), cols, |i| fp.is_free(cell(i)));
    d.iter()
        .map(|&d| {
            if d == 0.0 {
                CellClass::Free
            } else if d <= WALL_BAND_CELLS {
                CellClass::Occupied
            } else {
                CellClass::Unknown
            }
        })
        .collect()
}

/// Inclusive bounding box of touched global cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellBox {
    pub r0: usize,
    pub c0: usize,
    pub r1: usize,
    pub c1: usize,
}

impl CellBox {
    pub fn union(self, other: CellBox) -> CellBox {
        CellBox { r0: self.r0.min(other.r0), c0: self.c0.min(other.c0), r1: self.r1.max(other.r1), c1: self.c1.max(other.c1) }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RegisterStats {
    pub updated: usize,
    /// Informative local cells that fell outside the global extent.
    pub dropped: usize,
    pub touched: Option<CellBox>,
}

/// Marks cells along each ray FREE and each hit endpoint OCCUPIED in an
/// `h × w` egocentric grid of cell size `r`. Points are binned with
/// `x' = ⌊x/r⌋ + ⌊(w-1)/2⌋`, `z' = ⌊z/r⌋ + ⌊(h-1)/2⌋`; points outside the
/// window are discarded. Occupied marks win over free marks.
pub fn ground_project(scan: &RangeScan, r: f64, h: usize, w: usize) -> LocalGrid {
    let mut grid = LocalGrid::uniform(h, w, r);
    let free = one_hot(CellClass::Free);
    let occ = one_hot(CellClass::Occupied);
    let step = r / 4.0;
    for ray in &scan.rays {
        let (sz, sx) = sin_cos_deg(ray.bearing_deg);
        let n = (ray.range_m / step).ceil() as usize;
        for i in 0..n {
            let t = i as f64 * step;
            if t >= ray.range_m {
                break;
            }
            if let Some(cell) = grid.cell_of(t * sx, t * sz) {
                grid.probs.set(cell, free);
            }
        }
    }
    for ray in scan.rays.iter().filter(|r| r.hit) {
        let (sz, sx) = sin_cos_deg(ray.bearing_deg);
        // half a cell past the boundary lands inside the wall cell
        let t = ray.range_m + r / 2.0;
        if let Some(cell) = grid.cell_of(t * sx, t * sz) {
            grid.probs.set(cell, occ);
        }
    }
    grid
}

/// Egocentric coordinates (forward, right) of a world point.
fn world_to_ego(pose: &AgentPose, x: f64, z: f64) -> (f64, f64) {
    let (s, c) = sin_cos_deg(pose.heading_deg);
    let (dx, dz) = (x - pose.x_m, z - pose.z_m);
    (dx * c + dz * s, -dx * s + dz * c)
}

fn ego_to_world(pose: &AgentPose, fwd: f64, right: f64) -> (f64, f64) {
    let (s, c) = sin_cos_deg(pose.heading_deg);
    (pose.x_m + fwd * c - right * s, pose.z_m + fwd * s + right * c)
}

/// Registers a local grid at `pose` by a Bayes product per global cell.
/// Each global cell whose centre falls in the rotated window takes its
/// nearest local cell as likelihood; uniform local cells are skipped.
pub fn register_bayes(global: &mut GlobalMap, local: &LocalGrid, pose: &AgentPose) -> RegisterStats {
    register_bayes_where(global, local, pose, |_, _| true)
}

/// [`register_bayes`] restricted to the pairs (global index, local index)
/// accepted by `keep`.
pub fn register_bayes_where(global: &mut GlobalMap, local: &LocalGrid, pose: &AgentPose, keep: impl Fn(usize, usize) -> bool) -> RegisterStats {
    let mut stats = RegisterStats::default();
    let r = global.cell_size;
    // window corners in world coordinates bound the cells to visit
    let (cz, cx) = local.center();
    let lo_x = -(cx as f64) * local.cell_size;
    let hi_x = (local.w() - cx) as f64 * local.cell_size;
    let lo_z = -(cz as f64) * local.cell_size;
    let hi_z = (local.h() - cz) as f64 * local.cell_size;
    let corners = [(lo_x, lo_z), (lo_x, hi_z), (hi_x, lo_z), (hi_x, hi_z)].map(|(f, s)| ego_to_world(pose, f, s));
    let min_x = corners.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let max_x = corners.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
    let min_z = corners.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let max_z = corners.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let c_lo = ((min_x - global.origin.0) / r).floor() as i64 - 1;
    let c_hi = ((max_x - global.origin.0) / r).ceil() as i64 + 1;
    let r_lo = ((min_z - global.origin.1) / r).floor() as i64 - 1;
    let r_hi = ((max_z - global.origin.1) / r).ceil() as i64 + 1;
    let (gh, gw) = (global.h() as i64, global.w() as i64);
    for row in r_lo..=r_hi {
        for col in c_lo..=c_hi {
            let gcell = Cell::new(row as i32, col as i32);
            let (wx, wz) = global.cell_center(gcell);
            let (f, s) = world_to_ego(pose, wx, wz);
            let Some(lcell) = local.cell_of(f, s) else { continue };
            let lik = local.probs.cells[lcell.index(local.w())];
            if is_uniform(&lik) {
                continue;
            }
            if row < 0 || col < 0 || row >= gh || col >= gw {
                stats.dropped += 1;
                continue;
            }
            let (ru, cu) = (row as usize, col as usize);
            let gi = ru * global.w() + cu;
            if !keep(gi, lcell.index(local.w())) {
                continue;
            }
            global.probs.cells[gi] = bayes_update(&global.probs.cells[gi], &lik);
            stats.updated += 1;
            let b = CellBox { r0: ru, c0: cu, r1: ru, c1: cu };
            stats.touched = Some(stats.touched.map_or(b, |t| t.union(b)));
        }
    }
    stats
}

/// `h × w` egocentric view of the global map at `pose`; cells outside the
/// global extent read as uniform.
pub fn egocentric_crop(global: &GlobalMap, pose: &AgentPose, h: usize, w: usize) -> LocalGrid {
    let mut out = LocalGrid::uniform(h, w, global.cell_size);
    let (cz, cx) = out.center();
    let r = global.cell_size;
    for row in 0..h {
        for col in 0..w {
            let f = (col as f64 - cx as f64 + 0.5) * r;
            let s = (row as f64 - cz as f64 + 0.5) * r;
            let (wx, wz) = ego_to_world(pose, f, s);
            if let Some(d) = global.probs.get(global.cell_at(wx, wz)) {
                out.probs.cells[row * w + col] = *d;
            }
        }
    }
    out
}
