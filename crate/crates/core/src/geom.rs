//! Small grid-geometry helpers shared by every module.

use serde::{Deserialize, Serialize};

/// A cell index in some row-major grid. Signed so neighbours of border cells
/// can be expressed before bounds checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: i32,
    pub col: i32,
}

impl Cell {
    pub const fn new(row: i32, col: i32) -> Self {
        Self { row, col }
    }

    /// Euclidean distance in cells.
    pub fn dist(self, other: Cell) -> f64 {
        let dr = f64::from(self.row - other.row);
        let dc = f64::from(self.col - other.col);
        (dr * dr + dc * dc).sqrt()
    }

    pub fn chebyshev(self, other: Cell) -> i32 {
        (self.row - other.row).abs().max((self.col - other.col).abs())
    }

    pub fn in_bounds(self, rows: usize, cols: usize) -> bool {
        self.row >= 0 && self.col >= 0 && (self.row as usize) < rows && (self.col as usize) < cols
    }

    /// Row-major index, assuming the cell is in bounds.
    pub fn index(self, cols: usize) -> usize {
        self.row as usize * cols + self.col as usize
    }
}

/// Sine and cosine of an angle in degrees, exact at multiples of 90°.
pub fn sin_cos_deg(deg: f64) -> (f64, f64) {
    let d = deg.rem_euclid(360.0);
    if d == 0.0 {
        (0.0, 1.0)
    } else if d == 90.0 {
        (1.0, 0.0)
    } else if d == 180.0 {
        (0.0, -1.0)
    } else if d == 270.0 {
        (-1.0, 0.0)
    } else {
        d.to_radians().sin_cos()
    }
}

/// Wraps an angle difference into (-180, 180].
pub fn wrap_deg(deg: f64) -> f64 {
    let mut d = deg.rem_euclid(360.0);
    if d > 180.0 {
        d -= 360.0;
    }
    d
}

/// Cells on the segment between two cells (inclusive), Bresenham order.
pub fn raster_line(a: Cell, b: Cell) -> Vec<Cell> {
    let mut out = Vec::with_capacity((a.dist(b) as usize) + 2);
    let (mut r, mut c) = (a.row, a.col);
    let dr = (b.row - a.row).abs();
    let dc = (b.col - a.col).abs();
    let sr = if b.row >= a.row { 1 } else { -1 };
    let sc = if b.col >= a.col { 1 } else { -1 };
    let mut err = dc - dr;
    loop {
        out.push(Cell::new(r, c));
        if r == b.row && c == b.col {
            break;
        }
        let e2 = 2 * err;
        if e2 > -dr {
            err -= dr;
            c += sc;
        }
        if e2 < dc {
            err += dc;
            r += sr;
        }
    }
    out
}

/// The 8-neighbourhood offsets with their step costs in cells.
pub const NEIGHBORS8: [(i32, i32, f64); 8] = [
    (-1, 0, 1.0),
    (1, 0, 1.0),
    (0, -1, 1.0),
    (0, 1, 1.0),
    (-1, -1, std::f64::consts::SQRT_2),
    (-1, 1, std::f64::consts::SQRT_2),
    (1, -1, std::f64::consts::SQRT_2),
    (1, 1, std::f64::consts::SQRT_2),
];

/// Min-heap entry for Dijkstra/A* searches over grid indices.
#[derive(Debug, Clone, Copy)]
pub(crate) struct HeapEntry {
    pub key: f64,
    pub idx: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    // reversed so BinaryHeap pops the smallest key; index breaks ties
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other.key.total_cmp(&self.key).then_with(|| other.idx.cmp(&self.idx))
    }
}

/// Two-pass chamfer distance transform (unit/√2 weights) from the cells where
/// `seed` is true. Cells unreachable from any seed stay at `f64::INFINITY`.
pub fn chamfer_distance(rows: usize, cols: usize, seed: impl Fn(usize) -> bool) -> Vec<f64> {
    let s2 = std::f64::consts::SQRT_2;
    let mut d: Vec<f64> = (0..rows * cols).map(|i| if seed(i) { 0.0 } else { f64::INFINITY }).collect();
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            let mut v = d[i];
            if c > 0 {
                v = v.min(d[i - 1] + 1.0);
            }
            if r > 0 {
                v = v.min(d[i - cols] + 1.0);
                if c > 0 {
                    v = v.min(d[i - cols - 1] + s2);
                }
                if c + 1 < cols {
                    v = v.min(d[i - cols + 1] + s2);
                }
            }
            d[i] = v;
        }
    }
    for r in (0..rows).rev() {
        for c in (0..cols).rev() {
            let i = r * cols + c;
            let mut v = d[i];
            if c + 1 < cols {
                v = v.min(d[i + 1] + 1.0);
            }
            if r + 1 < rows {
                v = v.min(d[i + cols] + 1.0);
                if c + 1 < cols {
                    v = v.min(d[i + cols + 1] + s2);
                }
                if c > 0 {
                    v = v.min(d[i + cols - 1] + s2);
                }
            }
            d[i] = v;
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raster_line_endpoints_and_adjacency() {
        let line = raster_line(Cell::new(0, 0), Cell::new(3, 7));
        assert_eq!(line.first(), Some(&Cell::new(0, 0)));
        assert_eq!(line.last(), Some(&Cell::new(3, 7)));
        for w in line.windows(2) {
            assert!((w[0].row - w[1].row).abs() <= 1 && (w[0].col - w[1].col).abs() <= 1);
        }
        assert_eq!(raster_line(Cell::new(2, 2), Cell::new(2, 2)), vec![Cell::new(2, 2)]);
    }

    #[test]
    fn wrap_and_trig() {
        assert_eq!(wrap_deg(350.0), -10.0);
        assert_eq!(wrap_deg(-190.0), 170.0);
        assert_eq!(wrap_deg(180.0), 180.0);
        assert_eq!(sin_cos_deg(180.0), (0.0, -1.0));
        assert_eq!(sin_cos_deg(-90.0), (-1.0, 0.0));
    }

    #[test]
    fn chamfer_matches_known_values() {
        let d = chamfer_distance(5, 5, |i| i == 12);
        assert_eq!(d[12], 0.0);
        assert_eq!(d[13], 1.0);
        assert!((d[18] - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert_eq!(d[14], 2.0);
    }
}
