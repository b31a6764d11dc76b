//! Goal selection for the frontier and random-goal baselines.

use std::collections::BinaryHeap;

use rand::Rng;

use crate::geom::{chamfer_distance, Cell, HeapEntry, NEIGHBORS8};
use crate::mapping::{argmax, is_uniform, CellClass, GlobalMap, OCC};
use crate::world::label_components;

/// Frontier clusters smaller than this are ignored.
pub const MIN_FRONTIER_CELLS: usize = 3;
/// Frontier goals closer than this (cells) to the agent are ignored.
pub const MIN_FRONTIER_DIST: f64 = 5.0;

/// Grid distance from `from` over cells below `block` occupancy, in cells.
pub fn route_distances(map: &GlobalMap, from: Cell, block: f64) -> Vec<f64> {
    distances(map, from, |n| map.probs.occ(n) < block)
}

/// Grid distance from `from` over observed FREE cells that keep more than
/// `clearance` cells from any cell at or above `block` occupancy. The
/// clearance rule is waived next to `from`.
pub fn free_distances(map: &GlobalMap, from: Cell, block: f64, clearance: f64) -> Vec<f64> {
    let (h, w) = (map.h(), map.w());
    let cells = map.probs.cells();
    let wall = chamfer_distance(h, w, |i| cells[i][OCC] >= block);
    distances(map, from, |n| {
        let d = &cells[n.index(w)];
        !is_uniform(d) && argmax(d) == CellClass::Free && (wall[n.index(w)] > clearance || n.chebyshev(from) <= 1)
    })
}

fn distances(map: &GlobalMap, from: Cell, passable: impl Fn(Cell) -> bool) -> Vec<f64> {
    let (h, w) = (map.h(), map.w());
    let mut dist = vec![f64::INFINITY; h * w];
    if !map.contains(from) {
        return dist;
    }
    let mut heap = BinaryHeap::new();
    dist[from.index(w)] = 0.0;
    heap.push(HeapEntry { key: 0.0, idx: from.index(w) });
    while let Some(HeapEntry { key, idx }) = heap.pop() {
        if key > dist[idx] {
            continue;
        }
        let cur = Cell::new((idx / w) as i32, (idx % w) as i32);
        for &(dr, dc, cost) in &NEIGHBORS8 {
            let n = Cell::new(cur.row + dr, cur.col + dc);
            if !map.contains(n) || !passable(n) {
                continue;
            }
            let ni = n.index(w);
            if key + cost < dist[ni] {
                dist[ni] = key + cost;
                heap.push(HeapEntry { key: key + cost, idx: ni });
            }
        }
    }
    dist
}

/// Observed free cells with at least one never-observed 4-neighbour.
pub fn frontier_mask(obs: &GlobalMap) -> Vec<bool> {
    let (h, w) = (obs.h(), obs.w());
    let mut mask = vec![false; h * w];
    for r in 0..h {
        for c in 0..w {
            mask[r * w + c] = is_frontier(obs, Cell::new(r as i32, c as i32));
        }
    }
    mask
}

pub fn is_frontier(obs: &GlobalMap, cell: Cell) -> bool {
    if !obs.contains(cell) {
        return false;
    }
    let cells = obs.probs.cells();
    let w = obs.w();
    let d = &cells[cell.index(w)];
    if is_uniform(d) || argmax(d) != CellClass::Free {
        return false;
    }
    [(0, 1), (1, 0), (0, -1), (-1, 0)].iter().any(|(dr, dc)| {
        let n = Cell::new(cell.row + dr, cell.col + dc);
        obs.contains(n) && is_uniform(&cells[n.index(w)])
    })
}

/// Nearest-frontier goal: frontier cells are grouped into 4-connected
/// clusters, clusters under [`MIN_FRONTIER_CELLS`] are dropped, and the
/// remaining cell with the shortest route from the agent through observed
/// free space (see [`free_distances`]) wins. Cells closer than
/// [`MIN_FRONTIER_DIST`] to the agent or to an `avoid` cell are skipped.
pub fn frontier_goal(obs: &GlobalMap, agent: Cell, block: f64, clearance: f64, avoid: &[Cell]) -> Option<Cell> {
    let w = obs.w();
    let mask = frontier_mask(obs);
    let (labels, n) = label_components(obs.h(), w, |i| mask[i]);
    let mut sizes = vec![0usize; n as usize];
    for l in labels.iter().flatten() {
        sizes[*l as usize] += 1;
    }
    let dist = free_distances(obs, agent, block, clearance);
    let mut best: Option<(f64, Cell)> = None;
    for (i, l) in labels.iter().enumerate() {
        let Some(l) = l else { continue };
        let c = Cell::new((i / w) as i32, (i % w) as i32);
        let d = dist[i];
        if sizes[*l as usize] < MIN_FRONTIER_CELLS || !d.is_finite() || c.dist(agent) < MIN_FRONTIER_DIST || near_any(c, avoid) {
            continue;
        }
        if best.is_none_or(|(bd, bc)| d < bd || (d == bd && c < bc)) {
            best = Some((d, c));
        }
    }
    best.map(|(_, c)| c)
}

fn near_any(c: Cell, avoid: &[Cell]) -> bool {
    avoid.iter().any(|a| a.dist(c) < MIN_FRONTIER_DIST)
}

/// A uniformly drawn cell reachable from the agent over cells below
/// `block` occupancy, excluding the agent's own cell and cells near `avoid`.
pub fn random_goal<R: Rng>(map: &GlobalMap, agent: Cell, block: f64, avoid: &[Cell], rng: &mut R) -> Option<Cell> {
    let w = map.w();
    let dist = route_distances(map, agent, block);
    let reachable: Vec<usize> =
        (0..dist.len()).filter(|&i| dist[i].is_finite() && dist[i] > 0.0 && !near_any(Cell::new((i / w) as i32, (i % w) as i32), avoid)).collect();
    if reachable.is_empty() {
        return None;
    }
    let i = reachable[rng.random_range(0..reachable.len())];
    Some(Cell::new((i / w) as i32, (i % w) as i32))
}
