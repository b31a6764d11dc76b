//! Goal-biased RRT over a fused occupancy map.

use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geom::{raster_line, Cell, HeapEntry, NEIGHBORS8};
use crate::mapping::GlobalMap;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RrtParams {
    pub max_paths: usize,
    pub goal_rate: f64,
    /// Maximum edge length in cells.
    pub step_cells: f64,
    pub iterations: usize,
    /// Cells at or above this occupied probability block expansion.
    pub occ_threshold: f64,
    /// A node within this many cells of the goal reaches it.
    pub goal_tolerance_cells: f64,
    pub seed: u64,
}

impl Default for RrtParams {
    fn default() -> Self {
        Self { max_paths: 10, goal_rate: 0.2, step_cells: 5.0, iterations: 3000, occ_threshold: 0.6, goal_tolerance_cells: 4.0, seed: 0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RrtTree {
    pub nodes: Vec<Cell>,
    pub parents: Vec<Option<usize>>,
    pub depth: Vec<usize>,
}

impl RrtTree {
    fn push(&mut self, cell: Cell, parent: Option<usize>) -> usize {
        self.depth.push(parent.map_or(0, |p| self.depth[p] + 1));
        self.nodes.push(cell);
        self.parents.push(parent);
        self.nodes.len() - 1
    }

    /// Node indices from the root to `i`.
    pub fn chain(&self, mut i: usize) -> Vec<usize> {
        let mut out = vec![i];
        while let Some(p) = self.parents[i] {
            out.push(p);
            i = p;
        }
        out.reverse();
        out
    }

    fn nearest(&self, target: Cell) -> usize {
        let mut best = (i64::MAX, 0);
        for (i, n) in self.nodes.iter().enumerate() {
            let (dr, dc) = (i64::from(n.row - target.row), i64::from(n.col - target.col));
            let d = dr * dr + dc * dc;
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }
}

/// A candidate path: the rasterized cells of a chain of tree edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    /// Every traversed cell, starting at the agent cell.
    pub cells: Vec<Cell>,
    /// Tree vertices along the path.
    pub nodes: Vec<Cell>,
    pub length_m: f64,
}

impl Path {
    /// Path through `cells` in order, with vertices equal to the cells.
    pub fn from_cells(cells: Vec<Cell>, cell_size: f64) -> Result<Self> {
        let length_m = path_length(&cells, cell_size)?;
        Ok(Self { nodes: cells.clone(), cells, length_m })
    }

    /// Rasterizes consecutive vertices into a dense cell sequence.
    pub fn from_nodes(nodes: Vec<Cell>, cell_size: f64) -> Result<Self> {
        let first = *nodes.first().ok_or(Error::EmptyPath)?;
        let mut cells = vec![first];
        for w in nodes.windows(2) {
            cells.extend(raster_line(w[0], w[1]).into_iter().skip(1));
        }
        let length_m = path_length(&cells, cell_size)?;
        Ok(Self { cells, nodes, length_m })
    }

    pub fn terminal(&self) -> Cell {
        *self.cells.last().expect("paths are non-empty")
    }
}

/// Sum of distances between consecutive cell centres, in meters.
pub fn path_length(cells: &[Cell], cell_size: f64) -> Result<f64> {
    if cells.is_empty() {
        return Err(Error::EmptyPath);
    }
    Ok(cells.windows(2).map(|w| w[0].dist(w[1])).sum::<f64>() * cell_size)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub paths: Vec<Path>,
    /// No expansion from the agent cell was possible.
    pub blocked: bool,
    /// Point-goal mode: at least one path ends within the goal tolerance.
    pub reached_goal: bool,
    /// One tree without a goal; with a goal, one tree per goal-reaching
    /// path, or the single tree the fallback paths come from.
    pub trees: Vec<RrtTree>,
}

fn traversable(map: &GlobalMap, cell: Cell, threshold: f64) -> bool {
    map.contains(cell) && map.probs.occ(cell) < threshold
}

fn edge_clear(map: &GlobalMap, a: Cell, b: Cell, threshold: f64) -> bool {
    raster_line(a, b).into_iter().all(|c| traversable(map, c, threshold))
}

/// Cell at most `step` cells from `from` in the direction of `to`.
fn steer(from: Cell, to: Cell, step: f64) -> Cell {
    let d = from.dist(to);
    if d <= step {
        return to;
    }
    let (ur, uc) = (f64::from(to.row - from.row) / d, f64::from(to.col - from.col) / d);
    let mut t = step;
    loop {
        let c = Cell::new(from.row + (ur * t).round() as i32, from.col + (uc * t).round() as i32);
        if from.dist(c) <= step || t <= 1.0 {
            return c;
        }
        t -= 0.25;
    }
}

/// Dijkstra distance in cells to `goal` over traversable cells.
fn goal_distances(map: &GlobalMap, goal: Cell, threshold: f64) -> Vec<f64> {
    let (h, w) = (map.h(), map.w());
    let mut dist = vec![f64::INFINITY; h * w];
    if !map.contains(goal) {
        return dist;
    }
    let mut heap = BinaryHeap::new();
    dist[goal.index(w)] = 0.0;
    heap.push(HeapEntry { key: 0.0, idx: goal.index(w) });
    while let Some(HeapEntry { key, idx }) = heap.pop() {
        if key > dist[idx] {
            continue;
        }
        let cur = Cell::new((idx / w) as i32, (idx % w) as i32);
        for &(dr, dc, cost) in &NEIGHBORS8 {
            let n = Cell::new(cur.row + dr, cur.col + dc);
            if !traversable(map, n, threshold) {
                continue;
            }
            let ni = n.index(w);
            let nd = key + cost;
            if nd < dist[ni] {
                dist[ni] = nd;
                heap.push(HeapEntry { key: nd, idx: ni });
            }
        }
    }
    dist
}

/// Grows `tree` for at most `budget` iterations. With a goal, growth stops
/// at the first node that reaches it. Returns the iterations used and that
/// node.
fn grow(fused: &GlobalMap, tree: &mut RrtTree, goal: Option<Cell>, params: &RrtParams, rng: &mut ChaCha8Rng, budget: usize) -> (usize, Option<usize>) {
    let (h, w) = (fused.h(), fused.w());
    let th = params.occ_threshold;
    let mut in_tree = vec![false; h * w];
    for n in &tree.nodes {
        in_tree[n.index(w)] = true;
    }
    for it in 0..budget {
        let sample = match goal {
            Some(g) if rng.random_bool(params.goal_rate) => g,
            _ => Cell::new(rng.random_range(0..h as i32), rng.random_range(0..w as i32)),
        };
        let near = tree.nearest(sample);
        let new = steer(tree.nodes[near], sample, params.step_cells);
        if !fused.contains(new) || in_tree[new.index(w)] || !edge_clear(fused, tree.nodes[near], new, th) {
            continue;
        }
        in_tree[new.index(w)] = true;
        let i = tree.push(new, Some(near));
        if goal.is_some_and(|g| new.dist(g) <= params.goal_tolerance_cells) {
            return (it + 1, Some(i));
        }
    }
    (budget, None)
}

/// Grows RRTs from `agent` on `fused` and extracts candidate paths.
///
/// With a goal, the goal is sampled at `goal_rate` and trees are grown one
/// after another from the agent, each until its first node reaches the goal,
/// sharing one iteration budget; every tree contributes one path, extended
/// to the goal cell when that edge is clear. When the first tree spends the
/// budget without reaching the goal, the paths lead to its nodes with the
/// smallest grid distance to it. Without a goal, one tree is grown and the
/// paths lead to its deepest leaves.
pub fn plan_paths(fused: &GlobalMap, agent: Cell, goal: Option<Cell>, params: &RrtParams) -> Result<CandidateSet> {
    let th = params.occ_threshold;
    if !traversable(fused, agent, th) {
        return Err(Error::NotTraversable { row: agent.row, col: agent.col });
    }
    if params.step_cells < 1.0 || !(0.0..=1.0).contains(&params.goal_rate) {
        return Err(Error::InvalidParam("rrt step must be at least one cell and goal rate a probability".into()));
    }
    let w = fused.w();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let root = || {
        let mut t = RrtTree::default();
        t.push(agent, None);
        t
    };
    // (tree, node) pairs the paths lead to
    let mut ends: Vec<(usize, usize)> = Vec::new();
    let mut trees = Vec::new();
    let mut reached_goal = false;
    match goal {
        Some(g) if agent.dist(g) <= params.goal_tolerance_cells => {
            trees.push(root());
            ends.push((0, 0));
            reached_goal = true;
        }
        Some(g) => {
            let mut budget = params.iterations;
            while ends.len() < params.max_paths && (trees.is_empty() || budget > 0) {
                let mut tree = root();
                let (used, hit) = grow(fused, &mut tree, goal, params, &mut rng, budget);
                budget -= used;
                match hit {
                    Some(i) => {
                        ends.push((trees.len(), i));
                        trees.push(tree);
                        reached_goal = true;
                    }
                    None => {
                        if trees.is_empty() {
                            let gd = goal_distances(fused, g, th);
                            let mut idx: Vec<usize> = (1..tree.nodes.len()).collect();
                            idx.sort_by(|&a, &b| {
                                let (ca, cb) = (tree.nodes[a], tree.nodes[b]);
                                gd[ca.index(w)].total_cmp(&gd[cb.index(w)]).then(ca.dist(g).total_cmp(&cb.dist(g))).then(a.cmp(&b))
                            });
                            idx.truncate(params.max_paths);
                            ends.extend(idx.into_iter().map(|i| (0, i)));
                            trees.push(tree);
                        }
                        break;
                    }
                }
            }
        }
        None => {
            let mut tree = root();
            grow(fused, &mut tree, None, params, &mut rng, params.iterations);
            let mut is_leaf = vec![true; tree.nodes.len()];
            for p in tree.parents.iter().flatten() {
                is_leaf[*p] = false;
            }
            let mut idx: Vec<usize> = (1..tree.nodes.len()).filter(|&i| is_leaf[i]).collect();
            idx.sort_by(|&a, &b| tree.depth[b].cmp(&tree.depth[a]).then(a.cmp(&b)));
            idx.truncate(params.max_paths);
            ends.extend(idx.into_iter().map(|i| (0, i)));
            trees.push(tree);
        }
    }
    let blocked = trees[0].nodes.len() == 1 && ends.is_empty();

    let mut paths = Vec::with_capacity(ends.len());
    for (t, end) in ends {
        let tree = &trees[t];
        let mut nodes: Vec<Cell> = tree.chain(end).into_iter().map(|i| tree.nodes[i]).collect();
        if let Some(g) = goal.filter(|_| reached_goal) {
            let last = *nodes.last().expect("chain is non-empty");
            if last != g && edge_clear(fused, last, g, th) {
                nodes.push(g);
            }
        }
        paths.push(Path::from_nodes(nodes, fused.cell_size)?);
    }
    Ok(CandidateSet { paths, blocked, reached_goal, trees })
}
