//! Procedural floorplans: axis-aligned rooms on a block layout joined by
//! L-shaped corridors, plus small interior obstacles.

use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::floorplan::{label_components, Floorplan, Terrain};
use crate::geom::Cell;
use crate::{Error, Result};

/// Clearance (Chebyshev radius, cells) that every obstacle placement must
/// leave connected so the agent can still reach all rooms.
const CLEARANCE_CELLS: i32 = 2;
/// Wall thickness kept between a room and its layout block border.
const ROOM_MARGIN: usize = 3;
const MAX_ATTEMPTS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FloorplanParams {
    pub rows: usize,
    pub cols: usize,
    pub cell_size_m: f64,
    pub room_count: RangeInclusive<usize>,
    /// Room side length in cells.
    pub room_size: RangeInclusive<usize>,
    pub corridor_width: usize,
    pub obstacle_count: RangeInclusive<usize>,
    /// Obstacle side length in cells.
    pub obstacle_size: RangeInclusive<usize>,
    /// Probability of one extra corridor closing a loop.
    pub loop_probability: f64,
}

impl Default for FloorplanParams {
    fn default() -> Self {
        Self {
            rows: 480,
            cols: 480,
            cell_size_m: 0.05,
            room_count: 8..=14,
            room_size: 50..=100,
            corridor_width: 14,
            obstacle_count: 6..=16,
            obstacle_size: 4..=10,
            loop_probability: 0.3,
        }
    }
}

impl FloorplanParams {
    /// One empty room filling most of the grid.
    pub fn single_room(rows: usize, cols: usize) -> Self {
        let side = rows.min(cols) - 2 * ROOM_MARGIN - 2;
        Self { rows, cols, room_count: 1..=1, room_size: side..=side, obstacle_count: 0..=0, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParam(m));
        if self.rows < 64 || self.cols < 64 {
            return bad(format!("grid {}x{} is smaller than 64x64", self.rows, self.cols));
        }
        if self.room_count.is_empty() || self.room_size.is_empty() || self.obstacle_count.is_empty() || self.obstacle_size.is_empty() {
            return bad("empty parameter range".into());
        }
        if *self.room_count.start() == 0 || *self.room_size.start() < 4 || self.corridor_width == 0 {
            return bad("rooms need count >= 1, size >= 4, corridors width >= 1".into());
        }
        if !(self.cell_size_m > 0.0) {
            return bad(format!("cell size {}", self.cell_size_m));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Room {
    r0: usize,
    c0: usize,
    h: usize,
    w: usize,
}

impl Room {
    fn center(&self) -> (usize, usize) {
        (self.r0 + self.h / 2, self.c0 + self.w / 2)
    }
}

/// Deterministic for a fixed `(seed, params)`. Free space is guaranteed to be
/// a single 4-connected component, and so is the subset of cells with
/// [`CLEARANCE_CELLS`] of free margin.
pub fn generate_floorplan(seed: u64, params: &FloorplanParams) -> Result<Floorplan> {
    params.validate()?;
    let block = params.room_size.end() + 2 * ROOM_MARGIN;
    let nb_r = (params.rows - 2) / block;
    let nb_c = (params.cols - 2) / block;
    if nb_r * nb_c < *params.room_count.start() {
        return Err(Error::Generation {
            attempts: 0,
            reason: format!("{} rooms of up to {} cells do not fit in {}x{}", params.room_count.start(), params.room_size.end(), params.rows, params.cols),
        });
    }
    let mut last_reason = String::new();
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        match try_generate(&mut rng, params, block, nb_r, nb_c) {
            Ok(fp) => return Ok(fp),
            Err(reason) => last_reason = reason,
        }
    }
    Err(Error::Generation { attempts: MAX_ATTEMPTS, reason: last_reason })
}

fn try_generate(rng: &mut ChaCha8Rng, p: &FloorplanParams, block: usize, nb_r: usize, nb_c: usize) -> std::result::Result<Floorplan, String> {
    let (rows, cols) = (p.rows, p.cols);
    let mut cells = vec![Terrain::Occupied; rows * cols];
    // spread leftover space evenly around the block layout
    let pad_r = 1 + (rows - 2 - nb_r * block) / 2;
    let pad_c = 1 + (cols - 2 - nb_c * block) / 2;

    let n_rooms = rng.random_range(p.room_count.clone()).min(nb_r * nb_c);
    let mut slots: Vec<usize> = (0..nb_r * nb_c).collect();
    // partial Fisher-Yates: first n_rooms entries become the chosen slots
    for i in 0..n_rooms {
        let j = rng.random_range(i..slots.len());
        slots.swap(i, j);
    }
    let mut rooms = Vec::with_capacity(n_rooms);
    for &slot in &slots[..n_rooms] {
        let (br, bc) = (slot / nb_c, slot % nb_c);
        let h = rng.random_range(p.room_size.clone());
        let w = rng.random_range(p.room_size.clone());
        let r0 = pad_r + br * block + ROOM_MARGIN + rng.random_range(0..=(block - 2 * ROOM_MARGIN - h));
        let c0 = pad_c + bc * block + ROOM_MARGIN + rng.random_range(0..=(block - 2 * ROOM_MARGIN - w));
        let room = Room { r0, c0, h, w };
        carve_rect(&mut cells, cols, room.r0, room.c0, room.h, room.w);
        rooms.push(room);
    }

    // random spanning tree: each room links to its nearest predecessor
    let mut links = Vec::new();
    for i in 1..rooms.len() {
        let (ci_r, ci_c) = rooms[i].center();
        let j = (0..i)
            .min_by_key(|&j| {
                let (cj_r, cj_c) = rooms[j].center();
                ci_r.abs_diff(cj_r) + ci_c.abs_diff(cj_c)
            })
            .expect("i >= 1");
        links.push((i, j));
    }
    if rooms.len() > 2 && rng.random_bool(p.loop_probability.clamp(0.0, 1.0)) {
        let a = rng.random_range(0..rooms.len());
        let b = rng.random_range(0..rooms.len());
        if a != b {
            links.push((a, b));
        }
    }
    for (a, b) in links {
        let horizontal_first = rng.random_bool(0.5);
        carve_corridor(&mut cells, rows, cols, rooms[a].center(), rooms[b].center(), p.corridor_width, horizontal_first);
    }

    let mut fp = Floorplan::new(rows, cols, p.cell_size_m, (0.0, 0.0), cells).map_err(|e| e.to_string())?;
    if !is_connected(&fp) {
        return Err("layout is not connected".into());
    }

    let n_obstacles = rng.random_range(p.obstacle_count.clone());
    for _ in 0..n_obstacles {
        let room = rooms[rng.random_range(0..rooms.len())];
        let h = rng.random_range(p.obstacle_size.clone());
        let w = rng.random_range(p.obstacle_size.clone());
        if h + 4 > room.h || w + 4 > room.w {
            continue;
        }
        let r0 = room.r0 + 2 + rng.random_range(0..=(room.h - h - 4));
        let c0 = room.c0 + 2 + rng.random_range(0..=(room.w - w - 4));
        let mut trial = fp.clone();
        for r in r0..r0 + h {
            for c in c0..c0 + w {
                trial.set(Cell::new(r as i32, c as i32), Terrain::Occupied);
            }
        }
        if is_connected(&trial) {
            fp = trial;
        }
    }
    Ok(fp)
}

fn carve_rect(cells: &mut [Terrain], cols: usize, r0: usize, c0: usize, h: usize, w: usize) {
    for r in r0..r0 + h {
        for c in c0..c0 + w {
            cells[r * cols + c] = Terrain::Free;
        }
    }
}

fn carve_corridor(cells: &mut [Terrain], rows: usize, cols: usize, a: (usize, usize), b: (usize, usize), width: usize, horizontal_first: bool) {
    let half = width / 2;
    let clamp_r = |r: usize| r.clamp(1, rows - 2);
    let clamp_c = |c: usize| c.clamp(1, cols - 2);
    let mut band = |r_lo: usize, r_hi: usize, c_lo: usize, c_hi: usize| {
        let (r_lo, r_hi) = (clamp_r(r_lo), clamp_r(r_hi));
        let (c_lo, c_hi) = (clamp_c(c_lo), clamp_c(c_hi));
        for r in r_lo..=r_hi {
            for c in c_lo..=c_hi {
                cells[r * cols + c] = Terrain::Free;
            }
        }
    };
    let corner = if horizontal_first { (a.0, b.1) } else { (b.0, a.1) };
    for (from, to) in [(a, corner), (corner, b)] {
        let (r_lo, r_hi) = (from.0.min(to.0), from.0.max(to.0));
        let (c_lo, c_hi) = (from.1.min(to.1), from.1.max(to.1));
        let extra = width - 1 - half;
        band(r_lo.saturating_sub(half), r_hi + extra, c_lo.saturating_sub(half), c_hi + extra);
    }
}

/// Free cells form one component and so do the cells with agent clearance.
fn is_connected(fp: &Floorplan) -> bool {
    let (_, n_free) = fp.free_components();
    if n_free != 1 {
        return false;
    }
    let clear = fp.clear_mask(CLEARANCE_CELLS);
    let (_, n_clear) = label_components(fp.rows(), fp.cols(), |i| clear[i]);
    n_clear == 1
}
