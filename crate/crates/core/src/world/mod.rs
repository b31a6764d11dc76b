//! Deterministic 2D indoor world: floorplans, agent kinematics, range
//! sensing and episode sampling.

mod episode;
mod floorplan;
mod generate;
mod geodesic;
mod sensor;

pub use episode::{sample_episode, sample_start, Episode, EpisodeConstraints};
pub(crate) use floorplan::label_components;
pub use floorplan::{Floorplan, Terrain};
pub use generate::{generate_floorplan, FloorplanParams};
pub use geodesic::{distance_field, geodesic_distance};
pub use sensor::{sense, RangeScan, Ray, SensorConfig};

use serde::{Deserialize, Serialize};

use crate::geom::sin_cos_deg;

/// Forward translation of one `MoveForward` action, meters.
pub const FORWARD_STEP_M: f64 = 0.25;
/// Rotation of one turn action, degrees.
pub const TURN_STEP_DEG: f64 = 10.0;
/// Agent radius used by the collision check, in cells.
pub const AGENT_RADIUS_CELLS: f64 = 1.0;

/// Agent position in world meters and heading in degrees.
///
/// Heading is measured clockwise from the +x axis (with +z pointing "down"
/// the grid rows), so `TurnLeft` decreases it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentPose {
    pub x_m: f64,
    pub z_m: f64,
    pub heading_deg: f64,
}

impl AgentPose {
    pub fn new(x_m: f64, z_m: f64, heading_deg: f64) -> Self {
        Self { x_m, z_m, heading_deg: heading_deg.rem_euclid(360.0) }
    }

    pub fn dist_to(&self, x: f64, z: f64) -> f64 {
        ((self.x_m - x).powi(2) + (self.z_m - z).powi(2)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    MoveForward,
    TurnLeft,
    TurnRight,
    Stop,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::MoveForward, Action::TurnLeft, Action::TurnRight, Action::Stop];
}

/// Applies one action. Blocked forward moves leave the pose untouched and
/// report `collided = true`; they never slide along walls.
pub fn step(floorplan: &Floorplan, pose: &AgentPose, action: Action) -> (AgentPose, bool) {
    match action {
        Action::Stop => (*pose, false),
        Action::TurnLeft => (AgentPose::new(pose.x_m, pose.z_m, pose.heading_deg - TURN_STEP_DEG), false),
        Action::TurnRight => (AgentPose::new(pose.x_m, pose.z_m, pose.heading_deg + TURN_STEP_DEG), false),
        Action::MoveForward => {
            let (s, c) = sin_cos_deg(pose.heading_deg);
            let nx = pose.x_m + FORWARD_STEP_M * c;
            let nz = pose.z_m + FORWARD_STEP_M * s;
            if swept_segment_clear(floorplan, pose.x_m, pose.z_m, nx, nz) {
                (AgentPose { x_m: nx, z_m: nz, heading_deg: pose.heading_deg }, false)
            } else {
                (*pose, true)
            }
        }
    }
}

/// Samples the segment every quarter cell and checks a disc of
/// [`AGENT_RADIUS_CELLS`] around each sample (centre plus eight rim points).
pub fn swept_segment_clear(fp: &Floorplan, x0: f64, z0: f64, x1: f64, z1: f64) -> bool {
    let r = fp.cell_size();
    let len = ((x1 - x0).powi(2) + (z1 - z0).powi(2)).sqrt();
    let n = (len / (r / 4.0)).ceil().max(1.0) as usize;
    let rad = AGENT_RADIUS_CELLS * r;
    let diag = rad * std::f64::consts::FRAC_1_SQRT_2;
    let rim = [(0.0, 0.0), (rad, 0.0), (-rad, 0.0), (0.0, rad), (0.0, -rad), (diag, diag), (diag, -diag), (-diag, diag), (-diag, -diag)];
    (0..=n).all(|i| {
        let t = i as f64 / n as f64;
        let x = x0 + t * (x1 - x0);
        let z = z0 + t * (z1 - z0);
        rim.iter().all(|(dx, dz)| fp.is_free_at(x + dx, z + dz))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn room() -> Floorplan {
        Floorplan::open_room(80, 80, 0.05)
    }

    #[test]
    fn forward_in_open_space() {
        let fp = room();
        let (p, hit) = step(&fp, &AgentPose::new(1.0, 1.0, 0.0), Action::MoveForward);
        assert!(!hit);
        assert_eq!((p.x_m, p.z_m, p.heading_deg), (1.25, 1.0, 0.0));
    }

    #[test]
    fn turn_left_decreases_heading() {
        let fp = room();
        let (p, _) = step(&fp, &AgentPose::new(1.0, 1.0, 0.0), Action::TurnLeft);
        assert_eq!(p.heading_deg, 350.0);
        let (p, _) = step(&fp, &p, Action::TurnRight);
        assert_eq!(p.heading_deg, 0.0);
    }

    #[test]
    fn blocked_move_keeps_pose() {
        // boundary wall starts at x = 79 * 0.05 = 3.95; agent 0.1 m away
        let fp = room();
        let pose = AgentPose::new(3.85, 1.0, 0.0);
        let (p, hit) = step(&fp, &pose, Action::MoveForward);
        assert!(hit);
        assert_eq!(p, pose);
    }

    #[test]
    fn stop_is_identity() {
        let fp = room();
        let pose = AgentPose::new(2.0, 2.0, 40.0);
        assert_eq!(step(&fp, &pose, Action::Stop), (pose, false));
    }
}
