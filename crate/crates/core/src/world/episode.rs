use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::floorplan::Floorplan;
use super::geodesic::distance_field;
use super::{AgentPose, TURN_STEP_DEG};
use crate::geom::Cell;
use crate::{Error, Result};

/// Start/goal cells need this many free cells of margin so the agent's
/// collision disc fits.
const START_CLEARANCE: i32 = 2;
const MAX_STARTS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub floorplan_id: u64,
    pub start: AgentPose,
    /// Goal point (x, z) in meters; `None` for exploration episodes.
    pub goal: Option<(f64, f64)>,
    pub geodesic_m: f64,
    pub euclidean_m: f64,
    pub gedr: f64,
    pub budget_t: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConstraints {
    pub min_geodesic_m: f64,
    pub min_gedr: f64,
    pub budget_t: usize,
}

impl Default for EpisodeConstraints {
    fn default() -> Self {
        Self { min_geodesic_m: 1.0, min_gedr: 1.0, budget_t: 500 }
    }
}

fn clear_cells(fp: &Floorplan) -> Vec<Cell> {
    let mask = fp.clear_mask(START_CLEARANCE);
    (0..fp.rows() * fp.cols()).filter(|&i| mask[i]).map(|i| Cell::new((i / fp.cols()) as i32, (i % fp.cols()) as i32)).collect()
}

fn random_heading(rng: &mut ChaCha8Rng) -> f64 {
    let steps = (360.0 / TURN_STEP_DEG) as u32;
    f64::from(rng.random_range(0..steps)) * TURN_STEP_DEG
}

/// A random start pose in a clear cell, heading a multiple of the turn step.
pub fn sample_start(fp: &Floorplan, floorplan_id: u64, seed: u64, budget_t: usize) -> Result<Episode> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = clear_cells(fp);
    if cells.is_empty() {
        return Err(Error::EpisodeSampling(0));
    }
    let cell = cells[rng.random_range(0..cells.len())];
    let (x, z) = fp.cell_center(cell);
    Ok(Episode { floorplan_id, start: AgentPose::new(x, z, random_heading(&mut rng)), goal: None, geodesic_m: 0.0, euclidean_m: 0.0, gedr: 1.0, budget_t })
}

/// Rejection-samples a connected start/goal pair meeting the geodesic and
/// geodesic-to-euclidean ratio constraints.
pub fn sample_episode(fp: &Floorplan, floorplan_id: u64, seed: u64, constraints: &EpisodeConstraints) -> Result<Episode> {
    if !(constraints.min_gedr >= 1.0) {
        return Err(Error::InvalidParam(format!("min_gedr {} < 1", constraints.min_gedr)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = clear_cells(fp);
    if cells.len() < 2 {
        return Err(Error::EpisodeSampling(0));
    }
    for _ in 0..MAX_STARTS {
        let start = cells[rng.random_range(0..cells.len())];
        let field = distance_field(fp, start);
        let (sx, sz) = fp.cell_center(start);
        let qualifying: Vec<(Cell, f64, f64)> = cells
            .iter()
            .filter(|&&g| g != start)
            .filter_map(|&g| {
                let geo = field[g.index(fp.cols())];
                if !geo.is_finite() || geo < constraints.min_geodesic_m {
                    return None;
                }
                let (gx, gz) = fp.cell_center(g);
                let euc = ((gx - sx).powi(2) + (gz - sz).powi(2)).sqrt();
                (geo / euc >= constraints.min_gedr).then_some((g, geo, euc))
            })
            .collect();
        if qualifying.is_empty() {
            continue;
        }
        let (goal, geo, euc) = qualifying[rng.random_range(0..qualifying.len())];
        return Ok(Episode {
            floorplan_id,
            start: AgentPose::new(sx, sz, random_heading(&mut rng)),
            goal: Some(fp.cell_center(goal)),
            geodesic_m: geo,
            euclidean_m: euc,
            gedr: geo / euc,
            budget_t: constraints.budget_t,
        });
    }
    Err(Error::EpisodeSampling(MAX_STARTS))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn open_room_cannot_reach_high_gedr() {
        let fp = Floorplan::open_room(70, 70, 0.05);
        let c = EpisodeConstraints { min_geodesic_m: 0.0, min_gedr: 10.0, budget_t: 500 };
        assert!(matches!(sample_episode(&fp, 0, 1, &c), Err(Error::EpisodeSampling(_))));
    }

    #[test]
    fn unconstrained_pair_is_accepted() {
        let fp = Floorplan::open_room(40, 40, 0.05);
        let c = EpisodeConstraints { min_geodesic_m: 0.0, min_gedr: 1.0, budget_t: 500 };
        let ep = sample_episode(&fp, 0, 1, &c).unwrap();
        assert!(ep.gedr >= 1.0);
        assert!(ep.goal.is_some());
    }

    #[test]
    fn rejects_gedr_below_one() {
        let fp = Floorplan::open_room(40, 40, 0.05);
        let c = EpisodeConstraints { min_geodesic_m: 0.0, min_gedr: 0.5, budget_t: 500 };
        assert!(sample_episode(&fp, 0, 1, &c).is_err());
    }
}
