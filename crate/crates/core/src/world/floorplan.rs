use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::geom::Cell;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Terrain {
    Free,
    Occupied,
}

/// Ground-truth occupancy of a world. Row index grows with world z, column
/// index with world x; `origin` is the world coordinate of the corner of cell
/// (0, 0).
#[derive(Debug, Clone, PartialEq)]
pub struct Floorplan {
    rows: usize,
    cols: usize,
    cell_size: f64,
    origin: (f64, f64),
    cells: Vec<Terrain>,
}

impl Floorplan {
    /// Validates the invariants: positive cell size, an occupied boundary
    /// ring and at least one free cell.
    pub fn new(rows: usize, cols: usize, cell_size: f64, origin: (f64, f64), cells: Vec<Terrain>) -> Result<Self> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::InvalidFloorplan(format!("cell size {cell_size} must be positive")));
        }
        if rows < 3 || cols < 3 {
            return Err(Error::InvalidFloorplan(format!("{rows}x{cols} is too small")));
        }
        if cells.len() != rows * cols {
            return Err(Error::InvalidFloorplan(format!("expected {} cells, got {}", rows * cols, cells.len())));
        }
        let fp = Self { rows, cols, cell_size, origin, cells };
        for r in 0..rows {
            for c in 0..cols {
                if (r == 0 || c == 0 || r + 1 == rows || c + 1 == cols) && fp.cells[r * cols + c] == Terrain::Free {
                    return Err(Error::InvalidFloorplan(format!("boundary cell ({r}, {c}) is free")));
                }
            }
        }
        if fp.free_count() == 0 {
            return Err(Error::InvalidFloorplan("no free cells".into()));
        }
        Ok(fp)
    }

    /// A single rectangular room: free interior, occupied one-cell border.
    pub fn open_room(rows: usize, cols: usize, cell_size: f64) -> Self {
        let mut cells = vec![Terrain::Occupied; rows * cols];
        for r in 1..rows - 1 {
            for c in 1..cols - 1 {
                cells[r * cols + c] = Terrain::Free;
            }
        }
        Self::new(rows, cols, cell_size, (0.0, 0.0), cells).expect("open room is valid")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }
    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }
    pub fn cells(&self) -> &[Terrain] {
        &self.cells
    }

    pub fn terrain(&self, cell: Cell) -> Option<Terrain> {
        cell.in_bounds(self.rows, self.cols).then(|| self.cells[cell.index(self.cols)])
    }

    /// Out-of-bounds cells count as occupied.
    pub fn is_free(&self, cell: Cell) -> bool {
        self.terrain(cell) == Some(Terrain::Free)
    }

    pub fn cell_at(&self, x: f64, z: f64) -> Cell {
        Cell::new(((z - self.origin.1) / self.cell_size).floor() as i32, ((x - self.origin.0) / self.cell_size).floor() as i32)
    }

    pub fn is_free_at(&self, x: f64, z: f64) -> bool {
        self.is_free(self.cell_at(x, z))
    }

    /// World coordinates (x, z) of a cell centre.
    pub fn cell_center(&self, cell: Cell) -> (f64, f64) {
        (self.origin.0 + (f64::from(cell.col) + 0.5) * self.cell_size, self.origin.1 + (f64::from(cell.row) + 0.5) * self.cell_size)
    }

    pub fn free_count(&self) -> usize {
        self.cells.iter().filter(|t| **t == Terrain::Free).count()
    }

    pub(crate) fn set(&mut self, cell: Cell, t: Terrain) {
        let i = cell.index(self.cols);
        self.cells[i] = t;
    }

    /// 4-connected component labels of free cells; `None` for occupied.
    pub fn free_components(&self) -> (Vec<Option<u32>>, u32) {
        label_components(self.rows, self.cols, |i| self.cells[i] == Terrain::Free)
    }

    /// Free cells 4-connected to `start` (mask over all cells).
    pub fn reachable_from(&self, start: Cell) -> Vec<bool> {
        let mut seen = vec![false; self.rows * self.cols];
        if !self.is_free(start) {
            return seen;
        }
        let mut queue = VecDeque::from([start]);
        seen[start.index(self.cols)] = true;
        while let Some(c) = queue.pop_front() {
            for (dr, dc) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                let n = Cell::new(c.row + dr, c.col + dc);
                if self.is_free(n) && !seen[n.index(self.cols)] {
                    seen[n.index(self.cols)] = true;
                    queue.push_back(n);
                }
            }
        }
        seen
    }

    /// True when every cell within Chebyshev distance `radius` is free.
    pub fn is_clear(&self, cell: Cell, radius: i32) -> bool {
        (-radius..=radius).all(|dr| (-radius..=radius).all(|dc| self.is_free(Cell::new(cell.row + dr, cell.col + dc))))
    }

    /// Mask of cells that are clear at `radius`.
    pub fn clear_mask(&self, radius: i32) -> Vec<bool> {
        // separable erosion: free run lengths along rows then columns
        let (rows, cols) = (self.rows, self.cols);
        let w = (2 * radius + 1) as usize;
        let mut horiz = vec![false; rows * cols];
        for r in 0..rows {
            let mut run = 0usize;
            for c in 0..cols {
                run = if self.cells[r * cols + c] == Terrain::Free { run + 1 } else { 0 };
                if run >= w {
                    horiz[r * cols + c - radius as usize] = true;
                }
            }
        }
        let mut out = vec![false; rows * cols];
        for c in 0..cols {
            let mut run = 0usize;
            for r in 0..rows {
                run = if horiz[r * cols + c] { run + 1 } else { 0 };
                if run >= w {
                    out[(r - radius as usize) * cols + c] = true;
                }
            }
        }
        out
    }
}

pub(crate) fn label_components(rows: usize, cols: usize, member: impl Fn(usize) -> bool) -> (Vec<Option<u32>>, u32) {
    let mut labels: Vec<Option<u32>> = vec![None; rows * cols];
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..rows * cols {
        if labels[start].is_some() || !member(start) {
            continue;
        }
        labels[start] = Some(next);
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (r, c) = (i / cols, i % cols);
            let mut visit = |n: usize| {
                if labels[n].is_none() && member(n) {
                    labels[n] = Some(next);
                    queue.push_back(n);
                }
            };
            if r > 0 {
                visit(i - cols);
            }
            if r + 1 < rows {
                visit(i + cols);
            }
            if c > 0 {
                visit(i - 1);
            }
            if c + 1 < cols {
                visit(i + 1);
            }
        }
        next += 1;
    }
    (labels, next)
}
