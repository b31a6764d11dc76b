use std::collections::BinaryHeap;

use super::floorplan::Floorplan;
use crate::geom::{Cell, HeapEntry, NEIGHBORS8};
use crate::{Error, Result};

/// Dijkstra distances in meters from `source` over free cells with
/// 8-connectivity and √2 diagonal cost. Diagonal moves may not cut a corner
/// (both orthogonal neighbours must be free). Unreachable cells are infinite.
pub fn distance_field(fp: &Floorplan, source: Cell) -> Vec<f64> {
    let (rows, cols) = (fp.rows(), fp.cols());
    let mut dist = vec![f64::INFINITY; rows * cols];
    if !fp.is_free(source) {
        return dist;
    }
    let mut heap = BinaryHeap::new();
    dist[source.index(cols)] = 0.0;
    heap.push(HeapEntry { key: 0.0, idx: source.index(cols) });
    while let Some(HeapEntry { key, idx }) = heap.pop() {
        if key > dist[idx] {
            continue;
        }
        let cell = Cell::new((idx / cols) as i32, (idx % cols) as i32);
        for (dr, dc, cost) in NEIGHBORS8 {
            let n = Cell::new(cell.row + dr, cell.col + dc);
            if !fp.is_free(n) {
                continue;
            }
            if dr != 0 && dc != 0 && !(fp.is_free(Cell::new(cell.row + dr, cell.col)) && fp.is_free(Cell::new(cell.row, cell.col + dc))) {
                continue;
            }
            let nd = key + cost;
            let ni = n.index(cols);
            if nd < dist[ni] {
                dist[ni] = nd;
                heap.push(HeapEntry { key: nd, idx: ni });
            }
        }
    }
    let r = fp.cell_size();
    dist.iter_mut().for_each(|d| *d *= r);
    dist
}

/// Shortest 8-connected path length in meters between the cells containing
/// `a` and `b`; `f64::INFINITY` when they are disconnected.
pub fn geodesic_distance(fp: &Floorplan, a: (f64, f64), b: (f64, f64)) -> Result<f64> {
    let ca = fp.cell_at(a.0, a.1);
    let cb = fp.cell_at(b.0, b.1);
    for (cell, p) in [(ca, a), (cb, b)] {
        if !fp.is_free(cell) {
            return Err(Error::NotFree { x: p.0, z: p.1 });
        }
    }
    Ok(distance_field(fp, ca)[cb.index(fp.cols())])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Terrain;

    #[test]
    fn straight_corridor_matches_euclidean() {
        let fp = Floorplan::open_room(20, 100, 0.05);
        let d = geodesic_distance(&fp, (0.5, 0.5), (2.5, 0.5)).unwrap();
        assert!((d - 2.0).abs() <= 0.05 + 1e-12, "{d}");
    }

    #[test]
    fn sealed_room_is_disconnected() {
        let mut fp = Floorplan::open_room(20, 20, 0.05);
        for r in 1..19 {
            fp.set(Cell::new(r, 10), Terrain::Occupied);
        }
        let d = geodesic_distance(&fp, (0.2, 0.2), (0.8, 0.2)).unwrap();
        assert!(d.is_infinite());
    }

    #[test]
    fn occupied_endpoint_is_error() {
        let fp = Floorplan::open_room(20, 20, 0.05);
        assert!(matches!(geodesic_distance(&fp, (0.01, 0.01), (0.5, 0.5)), Err(Error::NotFree { .. })));
    }
}
