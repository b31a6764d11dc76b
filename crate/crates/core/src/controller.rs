//! Deterministic local controller: A* on the fused map, then turn toward or
//! step to a visible waypoint on the route.

use std::collections::{BinaryHeap, HashSet};

use serde::{Deserialize, Serialize};

use crate::geom::{chamfer_distance, raster_line, sin_cos_deg, wrap_deg, Cell, HeapEntry, NEIGHBORS8};
use crate::mapping::{argmax, CellClass, GlobalMap};
use crate::world::{Action, AgentPose, AGENT_RADIUS_CELLS, FORWARD_STEP_M};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerConfig {
    /// Cells at or above this occupied probability are not routable.
    pub block_threshold: f64,
    /// Extra cost for entering a cell whose most likely class is not FREE.
    pub unknown_penalty: f64,
    pub heading_tolerance_deg: f64,
    /// MOVE_FORWARD is withheld when the swept cells reach this occupancy.
    pub forward_block: f64,
    /// Waypoints are picked at most this many cells away.
    pub waypoint_max_cells: f64,
    /// A held waypoint is dropped once the agent is this close to it.
    pub waypoint_min_cells: f64,
    /// Cells closer than this to a blocked cell cost `near_wall_penalty`.
    pub hard_margin_cells: f64,
    /// Cells within this distance of a blocked cell are not routable, since
    /// the agent disc would touch the blocked cell.
    pub clearance_cells: f64,
    pub near_wall_penalty: f64,
    /// Cells closer than this to a blocked cell cost a penalty falling
    /// linearly to zero at the margin.
    pub soft_margin_cells: f64,
    pub soft_slope: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            block_threshold: 0.5,
            unknown_penalty: 0.5,
            heading_tolerance_deg: 5.0,
            forward_block: 0.9,
            waypoint_max_cells: 30.0,
            waypoint_min_cells: 3.0,
            hard_margin_cells: 2.0,
            clearance_cells: 1.5,
            near_wall_penalty: 10.0,
            soft_margin_cells: 4.0,
            soft_slope: 0.5,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ControllerState {
    pub goal: Option<Cell>,
    /// Last route, from the agent cell to the goal cell.
    pub route: Vec<Cell>,
    /// Waypoint being steered toward; kept while it stays visible so the
    /// heading does not flip between near-equal routes.
    pub waypoint: Option<Cell>,
    pub stuck: usize,
    /// Cells the agent has collided with; never routed through again.
    pub bumped: HashSet<Cell>,
}

impl ControllerState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a failed forward move by blocking every cell the agent disc
    /// would have swept that it does not already touch.
    pub fn note_collision(&mut self, map: &GlobalMap, pose: &AgentPose) {
        let start: HashSet<Cell> = footprint(map, pose.x_m, pose.z_m, 0.0, 0.0).collect();
        let (s, c) = sin_cos_deg(pose.heading_deg);
        let n = (FORWARD_STEP_M / (map.cell_size / 4.0)).ceil() as usize;
        for i in 1..=n {
            let t = i as f64 * FORWARD_STEP_M / n as f64;
            for cell in footprint(map, pose.x_m, pose.z_m, t * c, t * s) {
                if !start.contains(&cell) && map.contains(cell) {
                    self.bumped.insert(cell);
                }
            }
        }
    }
}

/// Cells touched by the agent disc (centre plus eight rim points) displaced by `(dx, dz)`.
fn footprint(map: &GlobalMap, x: f64, z: f64, dx: f64, dz: f64) -> impl Iterator<Item = Cell> + '_ {
    let rad = AGENT_RADIUS_CELLS * map.cell_size;
    let d = rad * std::f64::consts::FRAC_1_SQRT_2;
    let rim = [(0.0, 0.0), (rad, 0.0), (-rad, 0.0), (0.0, rad), (0.0, -rad), (d, d), (d, -d), (-d, d), (-d, -d)];
    rim.into_iter().map(move |(rx, rz)| map.cell_at(x + dx + rx, z + dz + rz))
}

/// True iff the pose lies within `radius_m` of the goal point (closed ball).
pub fn reached(pose: &AgentPose, goal: (f64, f64), radius_m: f64) -> bool {
    pose.dist_to(goal.0, goal.1) <= radius_m
}

fn blocked(map: &GlobalMap, state: &ControllerState, cell: Cell, cfg: &ControllerConfig) -> bool {
    !map.contains(cell) || map.probs.occ(cell) >= cfg.block_threshold || state.bumped.contains(&cell)
}

/// Per-call routing view: blocked cells plus their distance field, used for
/// both the clearance test and the near-wall cost.
struct Routing<'a> {
    map: &'a GlobalMap,
    state: &'a ControllerState,
    cfg: &'a ControllerConfig,
    wall: Vec<f64>,
    start: Cell,
    goal: Cell,
}

impl<'a> Routing<'a> {
    fn new(map: &'a GlobalMap, state: &'a ControllerState, start: Cell, goal: Cell, cfg: &'a ControllerConfig) -> Self {
        let (h, w) = (map.h(), map.w());
        let wall = chamfer_distance(h, w, |i| blocked(map, state, Cell::new((i / w) as i32, (i % w) as i32), cfg));
        Self { map, state, cfg, wall, start, goal }
    }

    /// Blocked, or too close to a blocked cell for the agent disc. The
    /// clearance rule is waived next to the start and goal cells.
    fn impassable(&self, c: Cell) -> bool {
        if blocked(self.map, self.state, c, self.cfg) {
            return true;
        }
        let near_end = c.chebyshev(self.start) <= 1 || c.chebyshev(self.goal) <= 1;
        !near_end && self.wall[c.index(self.map.w())] <= self.cfg.clearance_cells
    }

    fn step_cost(&self, c: Cell) -> f64 {
        let i = c.index(self.map.w());
        let d = self.wall[i];
        let mut cost = 0.0;
        if d < self.cfg.hard_margin_cells {
            cost += self.cfg.near_wall_penalty;
        } else if d < self.cfg.soft_margin_cells {
            cost += (self.cfg.soft_margin_cells - d) * self.cfg.soft_slope;
        }
        if argmax(&self.map.probs.cells()[i]) != CellClass::Free {
            cost += self.cfg.unknown_penalty;
        }
        cost
    }

    fn route(&self) -> Option<Vec<Cell>> {
        let (h, w) = (self.map.h(), self.map.w());
        let (start, goal) = (self.start, self.goal);
        if !self.map.contains(start) || blocked(self.map, self.state, goal, self.cfg) {
            return None;
        }
        let octile = |c: Cell| {
            let (dr, dc) = ((c.row - goal.row).abs() as f64, (c.col - goal.col).abs() as f64);
            dr.max(dc) + (std::f64::consts::SQRT_2 - 1.0) * dr.min(dc)
        };
        let mut g = vec![f64::INFINITY; h * w];
        let mut parent = vec![usize::MAX; h * w];
        let mut closed = vec![false; h * w];
        let mut heap = BinaryHeap::new();
        g[start.index(w)] = 0.0;
        heap.push(HeapEntry { key: octile(start), idx: start.index(w) });
        while let Some(HeapEntry { idx, .. }) = heap.pop() {
            if closed[idx] {
                continue;
            }
            closed[idx] = true;
            let cur = Cell::new((idx / w) as i32, (idx % w) as i32);
            if cur == goal {
                let mut route = vec![cur];
                let mut i = idx;
                while parent[i] != usize::MAX {
                    i = parent[i];
                    route.push(Cell::new((i / w) as i32, (i % w) as i32));
                }
                route.reverse();
                return Some(route);
            }
            for &(dr, dc, len) in &NEIGHBORS8 {
                let n = Cell::new(cur.row + dr, cur.col + dc);
                if self.impassable(n) {
                    continue;
                }
                if dr != 0 && dc != 0 && (self.impassable(Cell::new(cur.row + dr, cur.col)) || self.impassable(Cell::new(cur.row, cur.col + dc))) {
                    continue;
                }
                let ni = n.index(w);
                let ng = g[idx] + len + self.step_cost(n);
                if ng < g[ni] {
                    g[ni] = ng;
                    parent[ni] = idx;
                    heap.push(HeapEntry { key: ng + octile(n), idx: ni });
                }
            }
        }
        None
    }

    fn line_clear(&self, a: Cell, b: Cell) -> bool {
        raster_line(a, b).into_iter().skip(1).all(|c| !self.impassable(c))
    }

    /// Farthest route cell within `waypoint_max_cells` of the agent that is
    /// in line of sight.
    fn waypoint(&self, route: &[Cell]) -> Cell {
        let here = route[0];
        let mut best = None;
        for &c in route.iter().skip(1) {
            if here.dist(c) > self.cfg.waypoint_max_cells {
                break;
            }
            if self.line_clear(here, c) {
                best = Some(c);
            }
        }
        best.or_else(|| route.get(1).copied()).unwrap_or(here)
    }
}

/// A* route from `start` to `goal` over 8-connected cells without corner
/// cutting. The start cell is always allowed.
pub fn plan_route(map: &GlobalMap, state: &ControllerState, start: Cell, goal: Cell, cfg: &ControllerConfig) -> Option<Vec<Cell>> {
    Routing::new(map, state, start, goal, cfg).route()
}

fn forward_clear(map: &GlobalMap, state: &ControllerState, pose: &AgentPose, cfg: &ControllerConfig) -> bool {
    let (s, c) = sin_cos_deg(pose.heading_deg);
    let start: HashSet<Cell> = footprint(map, pose.x_m, pose.z_m, 0.0, 0.0).collect();
    let n = (FORWARD_STEP_M / (map.cell_size / 2.0)).ceil() as usize;
    (1..=n).all(|i| {
        let t = i as f64 * FORWARD_STEP_M / n as f64;
        footprint(map, pose.x_m, pose.z_m, t * c, t * s)
            .all(|cell| start.contains(&cell) || (map.contains(cell) && map.probs.occ(cell) < cfg.forward_block && !state.bumped.contains(&cell)))
    })
}

fn turn_toward(pose: &AgentPose, target: (f64, f64)) -> (Action, f64) {
    let want = (target.1 - pose.z_m).atan2(target.0 - pose.x_m).to_degrees();
    let err = wrap_deg(want - pose.heading_deg);
    (if err > 0.0 { Action::TurnRight } else { Action::TurnLeft }, err)
}

/// One action toward `goal`. Never returns STOP; stopping is the task
/// layer's decision. Without a route the agent rotates in place and the
/// stuck counter grows.
pub fn next_action(state: &mut ControllerState, pose: &AgentPose, fused: &GlobalMap, goal: Cell, cfg: &ControllerConfig) -> Action {
    let here = fused.cell_at(pose.x_m, pose.z_m);
    if state.goal != Some(goal) {
        state.waypoint = None;
    }
    state.goal = Some(goal);
    let routing = Routing::new(fused, state, here, goal, cfg);
    let Some(route) = routing.route() else {
        state.route.clear();
        state.waypoint = None;
        state.stuck += 1;
        return Action::TurnLeft;
    };
    let keep = state.waypoint.filter(|&w| {
        let d = here.dist(w);
        d >= cfg.waypoint_min_cells && d <= cfg.waypoint_max_cells && routing.line_clear(here, w)
    });
    let wp = match keep {
        Some(w) => w,
        None if route.len() == 1 => goal,
        None => routing.waypoint(&route),
    };
    state.waypoint = Some(wp);
    state.route = route;
    let target = fused.cell_center(wp);
    let (turn, err) = turn_toward(pose, target);
    if pose.dist_to(target.0, target.1) > 1e-9 && err.abs() > cfg.heading_tolerance_deg {
        return turn;
    }
    if !forward_clear(fused, state, pose, cfg) {
        state.stuck += 1;
        return turn;
    }
    state.stuck = 0;
    Action::MoveForward
}
